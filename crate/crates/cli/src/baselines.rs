//! `stdetect baselines` — the three classical models on hand-crafted
//! features, fit on the train split and scored on a chosen split.

use std::fs;

use stdetect_core::baselines::{
    extract_features, BaselineError, ForestConfig, GbmConfig, GradientBoosting,
    LogisticRegression, LogregConfig, RandomForest,
};
use stdetect_core::dataset::SplitName;
use stdetect_core::{EcgWindow, EvalReport, Label, PipelineConfig};

use crate::error::CliError;
use crate::eval::split_label;

fn features(windows: &[EcgWindow], rate: f64) -> Vec<Vec<f64>> {
    windows
        .iter()
        .map(|w| {
            let signal: Vec<f64> = w.samples.iter().map(|&v| f64::from(v)).collect();
            extract_features(&signal, rate).to_vec()
        })
        .collect()
}

fn labels(windows: &[EcgWindow]) -> Vec<bool> {
    windows.iter().map(|w| w.label == Label::Ischemic).collect()
}

fn model_err(e: BaselineError) -> CliError {
    match e {
        BaselineError::SingleClassInput | BaselineError::EmptyInput => CliError::Data(e.to_string()),
        other => CliError::Other(other.to_string()),
    }
}

pub fn run(config: &PipelineConfig, split_name: SplitName) -> Result<(), CliError> {
    let split = crate::shards::import(config)?;
    let train = split.windows(SplitName::Train);
    let eval = split.windows(split_name);
    if train.is_empty() || eval.is_empty() {
        return Err(CliError::Data(format!(
            "baselines need non-empty train and {} splits",
            split_label(split_name)
        )));
    }
    let rate = config.resample_to_hz;
    eprintln!("extracting features from {} + {} windows", train.len(), eval.len());
    let train_x = features(train, rate);
    let train_y = labels(train);
    let eval_x = features(eval, rate);
    let eval_y = labels(eval);

    let score_all = |predict: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
        eval_x.iter().map(|row| predict(row)).collect()
    };
    let report_of = |scores: Vec<f64>| -> Result<EvalReport, CliError> {
        EvalReport::from_scores(&scores, &eval_y).map_err(|e| CliError::Data(e.to_string()))
    };

    let logreg = LogisticRegression::fit(&train_x, &train_y, &LogregConfig::default())
        .map_err(model_err)?;
    let logreg_report = report_of(score_all(&|row| logreg.predict_proba(row)))?;

    let forest_cfg = ForestConfig { seed: config.seed, ..ForestConfig::default() };
    let forest = RandomForest::fit(&train_x, &train_y, &forest_cfg).map_err(model_err)?;
    let forest_report = report_of(score_all(&|row| forest.predict_proba(row)))?;

    let gbm = GradientBoosting::fit(&train_x, &train_y, &GbmConfig::default()).map_err(model_err)?;
    let gbm_report = report_of(score_all(&|row| gbm.predict_proba(row)))?;

    let mut doc = serde_json::Map::new();
    for (name, report) in [
        ("logreg", &logreg_report),
        ("random_forest", &forest_report),
        ("gbm", &gbm_report),
    ] {
        println!("{name:<14} auc {:.6} on {}", report.auc, split_label(split_name));
        let value = serde_json::to_value(report).expect("report serializes");
        doc.insert(name.to_string(), value);
    }

    fs::create_dir_all(&config.output_dir).map_err(|e| {
        CliError::Other(format!("cannot create {}: {e}", config.output_dir.display()))
    })?;
    let path = config.output_dir.join("baselines.json");
    let text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    fs::write(&path, text + "\n")
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))?;
    println!("report: {}", path.display());
    Ok(())
}
