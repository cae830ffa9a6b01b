//! Subcommand implementations. Each returns `Ok(())` on success or a
//! `CliError` whose variant picks the exit code.

use std::path::{Path, PathBuf};

use advkit::attack::{evaluate_attack, AttackReport};
use advkit::defense::{adversarial_train, robustness_curve};
use advkit::model::{load_weights, save_weights, sgd_train, MlpSpec};
use advkit::transfer::{train_zoo, transfer_matrix};
use advkit::vulnscore::{render_report, MlVulnRecord};

use crate::config::{budgeted_spec, Loaded, ModelSection};
use crate::error::CliError;
use crate::outputs::{history_csv, robustness_csv, transfer_csv, transfer_md, write_file};

const WEIGHTS_FILE: &str = "weights.json";

fn model_section(loaded: &Loaded) -> Result<&ModelSection, CliError> {
    loaded
        .cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::Validation("this subcommand needs a model section".into()))
}

fn model_spec(section: &ModelSection) -> Result<MlpSpec, CliError> {
    Ok(MlpSpec::new(section.widths.clone(), section.id.clone())?)
}

fn prepare_out_dir(loaded: &Loaded) -> Result<PathBuf, CliError> {
    let dir = loaded.out_dir()?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Fits the configured model on the training split and writes
/// `weights.json` plus `history.csv` to the output directory.
pub fn run_train(loaded: &Loaded) -> Result<(), CliError> {
    let model = model_section(loaded)?;
    let spec = model_spec(model)?;
    let (train_ds, _) = loaded.datasets()?;
    let out = prepare_out_dir(loaded)?;

    let (params, history) = sgd_train(&spec, &model.train.to_train_config(), &train_ds)?;
    save_weights(&params, &out.join(WEIGHTS_FILE))?;
    write_file(&out, "history.csv", &history_csv(&history))?;
    println!(
        "trained {} ({} epochs) -> {}",
        spec.id(),
        history.len(),
        out.display()
    );
    Ok(())
}

/// Adversarially trains the configured model (defense section controls
/// the crafting attack) and writes the same artifacts as `train`.
pub fn run_adv_train(loaded: &Loaded) -> Result<(), CliError> {
    let model = model_section(loaded)?;
    let defense = loaded
        .cfg
        .defense
        .as_ref()
        .ok_or_else(|| CliError::Validation("adv-train needs a defense section".into()))?;
    let spec = model_spec(model)?;
    let cfg = defense.to_adv_config(model.train.to_train_config())?;
    let (train_ds, _) = loaded.datasets()?;
    let out = prepare_out_dir(loaded)?;

    let (params, history) = adversarial_train(&spec, &cfg, &train_ds)?;
    save_weights(&params, &out.join(WEIGHTS_FILE))?;
    write_file(&out, "history.csv", &history_csv(&history))?;
    println!(
        "adversarially trained {} ({} epochs) -> {}",
        spec.id(),
        history.len(),
        out.display()
    );
    Ok(())
}

fn load_model_from(out: &Path) -> Result<advkit::model::MlpParams, CliError> {
    let path = out.join(WEIGHTS_FILE);
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "weights file not found: {} (run train or adv-train into this directory first)",
            path.display()
        )));
    }
    Ok(load_weights(&path)?)
}

/// Attacks the model stored in the output directory on the test split.
/// A configured `eps_list` produces `robustness.csv` (with a leading
/// clean row); otherwise a single evaluation writes `attack_report.json`.
pub fn run_attack(loaded: &Loaded) -> Result<(), CliError> {
    let section = loaded
        .cfg
        .attack
        .as_ref()
        .ok_or_else(|| CliError::Validation("attack needs an attack section".into()))?;
    let spec = section.to_spec()?;
    let (_, test_ds) = loaded.datasets()?;
    let out = prepare_out_dir(loaded)?;
    let params = load_model_from(&out)?;

    if let Some(eps_list) = &section.eps_list {
        let rows = robustness_curve(&params, &test_ds, &spec, eps_list)?;
        write_file(&out, "robustness.csv", &robustness_csv(&rows))?;
        println!(
            "swept {} over {} budgets -> {}",
            spec.name(),
            eps_list.len(),
            out.join("robustness.csv").display()
        );
    } else {
        let report = evaluate_attack(&params, &test_ds, &spec)?;
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Runtime(format!("encode attack report: {e}")))?;
        write_file(&out, "attack_report.json", &(json + "\n"))?;
        println!(
            "{}: success rate {} (top-1 {} -> {}) -> {}",
            spec.name(),
            report.success_rate,
            report.clean_top1,
            report.adv_top1,
            out.join("attack_report.json").display()
        );
    }
    Ok(())
}

/// Trains the configured zoo, crafts the configured attack on every
/// model, and writes the cross-model matrix as CSV and markdown.
pub fn run_transfer(loaded: &Loaded) -> Result<(), CliError> {
    let section = loaded
        .cfg
        .transfer
        .as_ref()
        .ok_or_else(|| CliError::Validation("transfer needs a transfer section".into()))?;
    let specs = section
        .zoo
        .iter()
        .map(|e| Ok(MlpSpec::new(e.widths.clone(), e.id.clone())?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let attack = budgeted_spec(&section.attack, section.epsilon, section.steps)?;
    let metric = section.metric()?;
    let (train_ds, test_ds) = loaded.datasets()?;
    let out = prepare_out_dir(loaded)?;

    // train_zoo replaces the seed per model from section.seeds.
    let base = advkit::model::TrainConfig {
        epochs: section.train.epochs,
        batch_size: section.train.batch_size,
        learning_rate: section.train.learning_rate,
        seed: 0,
    };
    let zoo = train_zoo(&specs, &base, &train_ds, &section.seeds)?;
    let matrix = transfer_matrix(&zoo, &test_ds, &attack, metric)?;
    write_file(&out, "transfer.csv", &transfer_csv(&matrix))?;
    write_file(&out, "transfer.md", &transfer_md(&matrix))?;
    println!(
        "transfer matrix for {} models -> {}",
        matrix.len(),
        out.join("transfer.csv").display()
    );
    Ok(())
}

/// Builds vulnerability records from previously written attack reports
/// and emits `report.md` + `report.json`.
pub fn run_score(loaded: &Loaded) -> Result<(), CliError> {
    let section = loaded
        .cfg
        .score
        .as_ref()
        .ok_or_else(|| CliError::Validation("score needs a score section".into()))?;
    let out = prepare_out_dir(loaded)?;

    let mut records = Vec::with_capacity(section.findings.len());
    for finding in &section.findings {
        let threat = finding.threat()?;
        let path = loaded.resolve(&finding.report);
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Validation(format!("attack report {}: {e}", path.display()))
        })?;
        let report: AttackReport = serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("attack report {}: {e}", path.display()))
        })?;
        records.push(MlVulnRecord::new(
            finding.title.clone(),
            threat,
            report,
            finding.narrative.clone(),
        ));
    }
    let (md, json) = render_report(&records);
    write_file(&out, "report.md", &md)?;
    write_file(&out, "report.json", &(json + "\n"))?;
    println!(
        "scored {} finding(s) -> {}",
        records.len(),
        out.join("report.md").display()
    );
    Ok(())
}

/// Runs the built-in numeric checks (finite-difference gradient oracle
/// and the closed-form linearization check) and prints one line each.
pub fn run_selftest() -> Result<(), CliError> {
    let results = advkit::selftest::run_all();
    let mut failures = 0usize;
    for r in &results {
        let status = if r.passed { "ok" } else { "FAILED" };
        println!("{status:6} {} — {}", r.name, r.detail);
        if !r.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(CliError::Runtime(format!(
            "{failures} of {} self-checks failed",
            results.len()
        )));
    }
    println!("all {} self-checks passed", results.len());
    Ok(())
}
