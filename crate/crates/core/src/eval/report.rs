use std::io::Write;

use super::metrics::EvalReport;
use crate::error::Result;
use crate::label::Label;

/// Column order of the results table after the model name.
pub const RESULT_COLUMNS: [&str; 4] = ["Normal", "Random", "Replay", "Zero"];

/// One row per model: the overall Gmean under "Normal", then the per-attack
/// Gmeans. Attacks absent from the test set are left empty.
pub fn write_results_table<W: Write>(reports: &[EvalReport], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["model"];
    header.extend(RESULT_COLUMNS);
    w.write_record(&header)?;
    let cell = |v: Option<&f64>| v.map_or_else(String::new, |g| format!("{g:.4}"));
    for r in reports {
        w.write_record([
            r.model_tag.clone(),
            cell(Some(&r.gmean)),
            cell(r.per_attack.get(&Label::RandomId)),
            cell(r.per_attack.get(&Label::Replay)),
            cell(r.per_attack.get(&Label::ZeroId)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(reports: &[EvalReport], mut sink: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut sink, reports)?;
    writeln!(sink)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_verdicts;
    use crate::occ::Verdict;

    #[test]
    fn table_shape() {
        let labels = [Label::Normal, Label::Normal, Label::ZeroId, Label::Replay];
        let v = [Verdict::Normal, Verdict::Normal, Verdict::Anomaly, Verdict::Normal];
        let r = evaluate_verdicts(&v, &labels, "SVDD (linear)", "0").unwrap();
        let mut buf = Vec::new();
        write_results_table(&[r.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "model,Normal,Random,Replay,Zero\nSVDD (linear),0.7071,,0.0000,1.0000\n");
        let mut buf = Vec::new();
        write_summary_json(&[r], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("\"tp\": 1"));
    }
}
