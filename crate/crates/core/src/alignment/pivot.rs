use std::collections::BTreeMap;

use super::{map_vector, procrustes_fit, refine, AlignmentMap, BilingualDictionary, RefinementConfig};
use crate::corpus::Language;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

/// Every language is mapped into the English space.
pub const PIVOT: Language = Language::En;

/// Maps every row through `map` and re-normalizes. Words, ranks and the
/// language tag are kept.
pub fn apply(map: &AlignmentMap, table: &EmbeddingTable) -> Result<EmbeddingTable> {
    if map.dim() != table.dim() {
        return Err(Error::invalid(format!(
            "map of dimension {} applied to a {}-dimensional table",
            map.dim(),
            table.dim()
        )));
    }
    Ok(table.map_rows(|row| map_vector(&map.w, row)))
}

/// Tables living in the pivot space, with the maps that put them there.
#[derive(Debug, Clone)]
pub struct PivotSpace {
    pub tables: BTreeMap<Language, EmbeddingTable>,
    pub maps: BTreeMap<Language, AlignmentMap>,
}

/// Aligns each non-pivot table to English, one language at a time in
/// DE, ES, FR order: supervised Procrustes on the seed dictionary, then
/// CSLS refinement, then `apply`.
///
/// Dictionaries are keyed by the non-pivot language and may be oriented
/// either way (the published files are English-first). The English table is
/// passed through untouched.
pub fn chain_to_pivot(
    tables: &BTreeMap<Language, EmbeddingTable>,
    dicts: &BTreeMap<Language, BilingualDictionary>,
    config: &RefinementConfig,
) -> Result<PivotSpace> {
    let pivot = tables
        .get(&PIVOT)
        .ok_or_else(|| Error::invalid("the English pivot table is required"))?;
    let (pivot_unit, _) = pivot.normalize();
    let mut out = PivotSpace {
        tables: BTreeMap::from([(PIVOT, pivot.clone())]),
        maps: BTreeMap::new(),
    };
    for (&lang, table) in tables.iter().filter(|(l, _)| **l != PIVOT) {
        let dict = dicts.get(&lang).ok_or_else(|| {
            Error::missing(
                format!("{}-{} dictionary", PIVOT.iso(), lang.iso()),
                format!("{}-{}", PIVOT.iso(), lang.iso()),
            )
        })?;
        let dict = orient(dict, lang)?;
        let (unit, _) = table.normalize();
        let seed = procrustes_fit(&unit, &pivot_unit, &dict)?;
        let mut map = refine(&seed, &unit, &pivot_unit, config)?;
        // keep the seed's dictionary statistics alongside the refined ones
        map.fit_report.filtered_pairs = seed.fit_report.filtered_pairs;
        log::info!(
            "{lang}->{PIVOT}: {} seed anchors, mean cosine {:.4} after {} refinement steps",
            seed.fit_report.anchor_count,
            map.fit_report.mean_cosine_after_fit,
            map.fit_report.refinement_iterations
        );
        out.tables.insert(lang, apply(&map, &unit)?);
        out.maps.insert(lang, map);
    }
    Ok(out)
}

fn orient(dict: &BilingualDictionary, lang: Language) -> Result<BilingualDictionary> {
    match (dict.source_language, dict.target_language) {
        (s, t) if s == lang && t == PIVOT => Ok(dict.clone()),
        (s, t) if s == PIVOT && t == lang => Ok(dict.reversed()),
        (s, t) => Err(Error::invalid(format!(
            "dictionary {s}-{t} supplied for language {lang}"
        ))),
    }
}
