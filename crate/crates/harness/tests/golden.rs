//! Frozen report fixtures. Regenerate with `UPDATE_GOLDEN=1 cargo test -p qbayes-harness --test golden`.

use std::path::{Path, PathBuf};

use qbayes_harness::{load_config, run_experiment, Command, Format};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn check(name: &str, command: Command, config: &str, format: Format) {
    let experiment = load_config(&root().join("configs").join(config)).unwrap();
    let report = run_experiment(command, &experiment).unwrap();
    assert!(report.passed(), "{name}: {:?}", report.failed_checks());
    let (text, ext) = match format {
        Format::Json => (report.deterministic_json() + "\n", "json"),
        Format::Csv => (report.to_csv(), "csv"),
    };
    let path = root().join("tests/golden").join(format!("{name}.{ext}"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(text == expected, "{name} differs from {}", path.display());
}

#[test]
fn worked_prob_report() {
    check("worked_prob", Command::UpdateProb, "worked_prob.json", Format::Json);
}

#[test]
fn worked_schedule_rows() {
    check("worked_schedule", Command::UpdateProb, "worked_schedule.json", Format::Csv);
}

#[test]
fn grover_elimination_report() {
    check("grover_elimination", Command::UpdateDet, "grover_elimination.json", Format::Json);
}

#[test]
fn two_valued_report() {
    check("two_valued", Command::UpdateDet, "two_valued.json", Format::Json);
}

#[test]
fn estimate_theta_report() {
    check("estimate_theta", Command::EstimateTheta, "estimate_theta.json", Format::Json);
}

#[test]
fn estimate_theta_rows() {
    check("estimate_theta", Command::EstimateTheta, "estimate_theta.json", Format::Csv);
}

#[test]
fn general_table_report() {
    check("general_table", Command::Decompose, "general_table.json", Format::Json);
}

#[test]
fn bound_report() {
    check("bound", Command::Bound, "worked_prob.json", Format::Json);
}
