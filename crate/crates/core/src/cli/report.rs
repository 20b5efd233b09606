use std::collections::BTreeMap;
use std::path::Path;

use super::criteria::{self, Status, Verdict};
use super::table::LoadedTable;
use super::CliError;

const ARTIFACTS: [&str; 9] =
    ["axioms", "quantization", "egorov", "breaking", "alf", "alf_classical", "alf_saturation", "cnt", "cnt_evolution"];

type Row = BTreeMap<String, String>;

fn rows_where<'a>(t: &'a LoadedTable, col: &'a str, value: &'a str) -> impl Iterator<Item = &'a Row> {
    t.rows.iter().filter(move |r| LoadedTable::text(r, col) == Some(value))
}

fn n_of(r: &Row) -> usize {
    LoadedTable::int(r, "n").unwrap_or(0) as usize
}

fn instances(dir: &Path) -> usize {
    std::fs::read(dir.join("verify-axioms.manifest.json"))
        .ok()
        .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
        .and_then(|v| v["config"]["axioms"]["instances"].as_u64())
        .unwrap_or(0) as usize
}

/// Evaluates the acceptance criteria on the tables found in `dir`.
pub fn evaluate(dir: &Path) -> Result<Vec<Verdict>, CliError> {
    let mut tables: BTreeMap<&str, LoadedTable> = BTreeMap::new();
    for name in ARTIFACTS {
        if let Some(t) = LoadedTable::read(&dir.join(format!("{name}.csv")))? {
            tables.insert(name, t);
        }
    }
    if tables.is_empty() {
        return Err(CliError::MissingArtifacts(dir.to_path_buf()));
    }
    let missing = |id: &'static str, name: &str| Verdict::not_run(id, format!("{name}.csv not found"));
    let mut out = Vec::new();

    out.push(match tables.get("alf_classical") {
        None => missing("AC-1", "alf_classical"),
        Some(t) => match rows_where(t, "k", "8").next() {
            Some(r) => criteria::ac1(
                LoadedTable::float(r, "increment").unwrap_or(f64::NAN),
                LoadedTable::float(r, "log_lambda").unwrap_or(f64::NAN),
            ),
            None => Verdict::not_run("AC-1", "classical curve shorter than k=8"),
        },
    });

    out.push(match tables.get("axioms") {
        None => missing("AC-2", "axioms"),
        Some(t) => {
            let mut worst = Vec::new();
            for name in ["weyl_composition", "weyl_trace", "theta_covariance", "expansion_roundtrip", "overcompleteness"] {
                let w = rows_where(t, "axiom", name)
                    .map(|r| (n_of(r), LoadedTable::float(r, "value").unwrap_or(f64::NAN)))
                    .max_by(|a, b| (a.1 / a.0 as f64).total_cmp(&(b.1 / b.0 as f64)));
                if let Some((n, v)) = w {
                    worst.push((name.to_string(), n, v));
                }
            }
            criteria::ac2(&worst, instances(dir))
        }
    });

    let series = |table: &str, k: &str, col: &str| -> Option<Vec<(usize, f64)>> {
        tables.get(table).map(|t| rows_where(t, "k", k).filter_map(|r| Some((n_of(r), LoadedTable::float(r, col)?))).collect())
    };
    out.push(series("alf", "3", "gap").map_or_else(|| missing("AC-3", "alf"), |s| criteria::ac3(&s)));
    out.push(series("cnt", "2", "width_rate").map_or_else(|| missing("AC-4", "cnt"), |s| criteria::ac4(&s)));

    out.push(match tables.get("breaking") {
        None => missing("AC-5", "breaking"),
        Some(t) => {
            let ll = t.rows.first().and_then(|r| LoadedTable::float(r, "log_lambda")).unwrap_or(f64::NAN);
            let ks: Vec<(usize, Option<usize>)> =
                t.rows.iter().map(|r| (n_of(r), LoadedTable::int(r, "k_star").map(|k| k as usize))).collect();
            criteria::ac5(&ks, ll, "literal residual")
        }
    });

    out.push(match tables.get("axioms") {
        None => missing("AC-6", "axioms"),
        Some(t) => {
            let errs: Vec<(usize, f64)> = rows_where(t, "axiom", "closed_form_overlap")
                .filter(|r| n_of(r) <= 512)
                .map(|r| (n_of(r), LoadedTable::float(r, "value").unwrap_or(f64::NAN)))
                .collect();
            let max_n = errs.iter().map(|e| e.0).max().unwrap_or(0);
            let max_err = errs.iter().map(|e| e.1).fold(0.0, f64::max);
            let sep = rows_where(t, "axiom", "separated_kernel").find(|r| n_of(r) == 64).and_then(|r| LoadedTable::float(r, "value"));
            criteria::ac6(max_err, max_n, sep)
        }
    });

    out.push(match tables.get("alf_saturation") {
        None => missing("AC-7", "alf_saturation"),
        Some(t) => {
            let rows: Vec<&Row> = t.rows.iter().filter(|r| n_of(r) == 32).collect();
            let mut bounded = rows.iter().all(|r| LoadedTable::text(r, "bounded") == Some("true"));
            if let Some(alf) = tables.get("alf") {
                bounded &= alf.rows.iter().all(|r| LoadedTable::text(r, "bounded") == Some("true"));
            }
            let mut curve: Vec<(i64, f64)> =
                rows.iter().filter_map(|r| Some((LoadedTable::int(r, "k")?, LoadedTable::float(r, "h")?))).collect();
            curve.sort_by_key(|c| c.0);
            criteria::ac7(bounded, &curve.into_iter().map(|c| c.1).collect::<Vec<_>>())
        }
    });

    out.push(match tables.get("quantization") {
        None => missing("AC-8", "quantization"),
        Some(t) => {
            let mut series = Vec::new();
            for f in ["cos_x1", "left_half"] {
                for metric in ["roundtrip_l2", "overlap_residual"] {
                    let s: Vec<(usize, f64)> = rows_where(t, "function", f).filter_map(|r| Some((n_of(r), LoadedTable::float(r, metric)?))).collect();
                    if let Ok(v) = criteria::pick(&s, &criteria::AC8_DIMS) {
                        series.push((format!("{f}/{metric}"), v));
                    }
                }
            }
            if series.len() < 4 {
                series.clear();
            }
            criteria::ac8(&series)
        }
    });
    Ok(out)
}

/// Writes `summary.txt` into `dir`; true when no criterion failed.
pub fn report(dir: &Path) -> Result<(Vec<Verdict>, bool), CliError> {
    let verdicts = evaluate(dir)?;
    let text: String = verdicts.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(dir.join("summary.txt"), text)?;
    let ok = verdicts.iter().all(|v| v.status != Status::Fail);
    Ok((verdicts, ok))
}
