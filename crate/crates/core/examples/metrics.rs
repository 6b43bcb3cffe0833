//! Confusion counts and macro-F1, including the degenerate single-class case.
//!
//! cargo run --example metrics

use cwi_transfer::eval::{f1_for_class, macro_f1, ConfusionCounts};

fn main() -> cwi_transfer::Result<()> {
    let gold = [1, 1, 0, 0, 0, 1, 0, 0];
    let pred = [1, 0, 0, 1, 0, 1, 0, 0];
    let c = ConfusionCounts::from_labels(&gold, &pred)?;
    println!("tp={} fp={} fn={} tn={}", c.tp, c.fp, c.fn_, c.tn);
    println!("F1 complex     {:.4}", f1_for_class(&c, 1));
    println!("F1 non-complex {:.4}", f1_for_class(&c, 0));
    println!("macro-F1       {:.4}", macro_f1(&c));

    // Predicting "non-complex" everywhere: the complex class scores 0/0 -> 0.
    let all_zero = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 867,
        tn: 3640,
    };
    println!("constant non-complex on 867/3640: macro-F1 {:.4}", macro_f1(&all_zero));
    Ok(())
}
