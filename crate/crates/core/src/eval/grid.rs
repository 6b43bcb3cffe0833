//! Language-combination tables in the layout of the published results.
//!
//! Rows are training combinations, columns are targets; dev and test get a
//! block each. Per column, the best cell among rows that do not train on the
//! target language is marked bold (`**.610**`) and the monolingual cell is
//! underlined (`_.606_`).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::experiment::{combination_label, train_combinations, ExperimentReport, Target};
use super::SCHEMA_VERSION;
use crate::corpus::{Language, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Bold,
    Underline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub train: String,
    pub target: Target,
    pub shots: usize,
    pub dev: Option<f64>,
    pub test: f64,
    pub dev_mark: Option<Mark>,
    pub test_mark: Option<Mark>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub schema_version: u32,
    pub rows: Vec<String>,
    pub columns: Vec<Target>,
    pub cells: Vec<GridCell>,
}

fn row_order(langs: &BTreeSet<Language>) -> usize {
    train_combinations()
        .iter()
        .position(|c| c == langs)
        .unwrap_or(usize::MAX)
}

/// Marks for one column of values; `rows[i]` is the training set of `values[i]`.
pub fn column_marks(rows: &[&BTreeSet<Language>], values: &[Option<f64>], target: Language) -> Vec<Option<Mark>> {
    let mono = BTreeSet::from([target]);
    let best = rows
        .iter()
        .zip(values)
        .filter(|(r, _)| !r.contains(&target))
        .filter_map(|(_, v)| *v)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    rows.iter()
        .zip(values)
        .map(|(r, v)| {
            let v = (*v)?;
            if **r == mono {
                Some(Mark::Underline)
            } else if !r.contains(&target) && Some(v) == best {
                Some(Mark::Bold)
            } else {
                None
            }
        })
        .collect()
}

impl Grid {
    /// Builds the table from cell reports. Two reports for the same
    /// (training languages, target) cell are an error.
    pub fn from_reports(reports: &[ExperimentReport]) -> Result<Grid> {
        if reports.is_empty() {
            return Err(Error::invalid("no reports to tabulate"));
        }
        let mut by_key: BTreeMap<(usize, String, Target), &ExperimentReport> = BTreeMap::new();
        for r in reports {
            let langs = &r.spec.train_languages;
            let key = (row_order(langs), combination_label(langs), r.spec.target);
            if by_key.insert(key, r).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate grid cell {} -> {}",
                    combination_label(langs),
                    r.spec.target
                )));
            }
        }
        let mut rows: Vec<(usize, String)> = by_key.keys().map(|(o, l, _)| (*o, l.clone())).collect();
        rows.dedup();
        let columns: Vec<Target> = by_key
            .keys()
            .map(|k| k.2)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut marks: BTreeMap<(String, Target), (Option<Mark>, Option<Mark>)> = BTreeMap::new();
        for &target in &columns {
            let in_col: Vec<&ExperimentReport> =
                by_key.iter().filter(|(k, _)| k.2 == target).map(|(_, r)| *r).collect();
            let sets: Vec<&BTreeSet<Language>> = in_col.iter().map(|r| &r.spec.train_languages).collect();
            let dev: Vec<Option<f64>> = in_col.iter().map(|r| r.dev_macro_f1).collect();
            let test: Vec<Option<f64>> = in_col.iter().map(|r| Some(r.test_macro_f1)).collect();
            let dm = column_marks(&sets, &dev, target.language());
            let tm = column_marks(&sets, &test, target.language());
            for (i, r) in in_col.iter().enumerate() {
                marks.insert((combination_label(&r.spec.train_languages), target), (dm[i], tm[i]));
            }
        }

        let cells = by_key
            .into_iter()
            .map(|((_, label, target), r)| {
                let (dev_mark, test_mark) = marks[&(label.clone(), target)];
                GridCell {
                    train: label,
                    target,
                    shots: r.spec.shots,
                    dev: r.dev_macro_f1,
                    test: r.test_macro_f1,
                    dev_mark,
                    test_mark,
                }
            })
            .collect();
        Ok(Grid {
            schema_version: SCHEMA_VERSION,
            rows: rows.into_iter().map(|(_, l)| l).collect(),
            columns,
            cells,
        })
    }

    pub fn cell(&self, train: &str, target: Target) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.train == train && c.target == target)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serializes")
    }

    /// Aligned plain-text rendering with a dev block and a test block.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for split in [Split::Dev, Split::Test] {
            let cols: Vec<Target> = self
                .columns
                .iter()
                .copied()
                .filter(|t| split == Split::Test || t.has_dev())
                .collect();
            if cols.is_empty() {
                continue;
            }
            let mut table: Vec<Vec<String>> = Vec::new();
            let mut header = vec![format!("{split} / train")];
            header.extend(cols.iter().map(|t| t.code().to_string()));
            table.push(header);
            for row in &self.rows {
                let mut line = vec![row.clone()];
                for &t in &cols {
                    let text = match self.cell(row, t) {
                        None => "-".to_string(),
                        Some(c) => {
                            let (v, m) = if split == Split::Dev {
                                (c.dev, c.dev_mark)
                            } else {
                                (Some(c.test), c.test_mark)
                            };
                            match v {
                                None => "-".to_string(),
                                Some(v) => decorate(&format_score(v), m),
                            }
                        }
                    };
                    line.push(text);
                }
                table.push(line);
            }
            let widths: Vec<usize> = (0..table[0].len())
                .map(|i| table.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
                .collect();
            for r in &table {
                let cells: Vec<String> = r
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// `.606` style, three decimals without the leading zero.
pub fn format_score(v: f64) -> String {
    let s = format!("{v:.3}");
    match s.strip_prefix('0') {
        Some(rest) => rest.to_string(),
        None => s,
    }
}

fn decorate(s: &str, mark: Option<Mark>) -> String {
    match mark {
        Some(Mark::Bold) => format!("**{s}**"),
        Some(Mark::Underline) => format!("_{s}_"),
        None => s.to_string(),
    }
}

pub fn write_reports_jsonl<W: Write>(reports: &[ExperimentReport], mut out: W) -> Result<()> {
    for r in reports {
        let line = serde_json::to_string(r).map_err(|e| Error::Json {
            context: "serializing report".into(),
            source: e,
        })?;
        writeln!(out, "{line}").map_err(|e| Error::io("<reports>", e))?;
    }
    Ok(())
}

pub fn read_reports_jsonl<R: BufRead>(reader: R) -> Result<Vec<ExperimentReport>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<reports>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Json {
            context: format!("report line {}", i + 1),
            source: e,
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_format() {
        assert_eq!(format_score(0.6055), ".606");
        assert_eq!(format_score(1.0), "1.000");
        assert_eq!(format_score(0.0), ".000");
    }

    #[test]
    fn marks_follow_table_convention() {
        use Language::{De, En, Es};
        let sets: Vec<BTreeSet<Language>> = vec![
            [En].into(),
            [De].into(),
            [Es].into(),
            [En, De].into(),
            [En, Es].into(),
            [De, Es].into(),
            [En, De, Es].into(),
        ];
        let refs: Vec<&BTreeSet<Language>> = sets.iter().collect();
        // German test column of the MUSE+BiLSTM block.
        let vals = [0.625, 0.483, 0.602, 0.774, 0.626, 0.688, 0.774].map(Some);
        let m = column_marks(&refs, &vals, De);
        assert_eq!(m[1], Some(Mark::Underline));
        assert_eq!(m[4], Some(Mark::Bold));
        assert_eq!(m.iter().filter(|x| x.is_some()).count(), 2);
    }
}
