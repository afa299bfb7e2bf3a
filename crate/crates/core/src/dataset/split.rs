//! Record-granularity splitting and class balancing.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, DatasetSplit, EcgWindow, Label, SplitName};

/// Partitions windows into train/validation/test at whole-record
/// granularity with a seeded shuffle, so no patient leaks across
/// splits. When achievable by swapping one record, the train split is
/// adjusted to contain both classes.
pub fn split_by_record(
    windows: Vec<EcgWindow>,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    let (f_train, f_val, f_test) = fractions;
    let sum = f_train + f_val + f_test;
    assert!((sum - 1.0).abs() <= 1e-9, "fractions must sum to 1, got {sum}");

    let mut record_ids: Vec<String> = windows.iter().map(|w| w.record_id.clone()).collect();
    record_ids.sort_unstable();
    record_ids.dedup();
    let n = record_ids.len();
    let parts = [f_train, f_val, f_test].iter().filter(|&&f| f > 0.0).count();
    if n < parts {
        return Err(DatasetError::TooFewRecords { have: n, need: parts });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    record_ids.shuffle(&mut rng);

    // Cumulative rounding keeps the three counts summing to n, then
    // every non-empty fraction is guaranteed at least one record.
    let c1 = (f_train * n as f64).round() as usize;
    let c2 = ((f_train + f_val) * n as f64).round() as usize;
    let mut counts = [c1.min(n), c2.min(n).saturating_sub(c1.min(n)), 0];
    counts[2] = n - counts[0] - counts[1];
    let fractions = [f_train, f_val, f_test];
    loop {
        let Some(starved) = (0..3).find(|&i| fractions[i] > 0.0 && counts[i] == 0) else {
            break;
        };
        let richest = (0..3).max_by_key(|&i| counts[i]).unwrap();
        counts[richest] -= 1;
        counts[starved] += 1;
    }

    let mut provenance: BTreeMap<String, SplitName> = BTreeMap::new();
    let names = [SplitName::Train, SplitName::Validation, SplitName::Test];
    let mut offset = 0;
    for (count, name) in counts.into_iter().zip(names) {
        for id in &record_ids[offset..offset + count] {
            provenance.insert(id.clone(), name);
        }
        offset += count;
    }

    ensure_train_class_coverage(&windows, &mut provenance);

    let mut split = DatasetSplit { provenance, ..Default::default() };
    for w in windows {
        match split.provenance[&w.record_id] {
            SplitName::Train => split.train.push(w),
            SplitName::Validation => split.validation.push(w),
            SplitName::Test => split.test.push(w),
        }
    }
    Ok(split)
}

/// Swaps one record between train and another split when train is
/// missing a class that some other record could supply.
fn ensure_train_class_coverage(
    windows: &[EcgWindow],
    provenance: &mut BTreeMap<String, SplitName>,
) {
    // Which labels does each record contain?
    let mut has: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for w in windows {
        let entry = has.entry(&w.record_id).or_default();
        match w.label {
            Label::Normal => entry.0 = true,
            Label::Ischemic => entry.1 = true,
        }
    }
    for missing in [Label::Normal, Label::Ischemic] {
        let covered = |prov: &BTreeMap<String, SplitName>| {
            prov.iter().any(|(id, &s)| {
                s == SplitName::Train && record_has(&has, id, missing)
            })
        };
        if covered(provenance) {
            continue;
        }
        // First outside record with the class, first train record
        // without it; BTreeMap order makes the choice deterministic.
        let donor = provenance
            .iter()
            .find(|(id, &s)| s != SplitName::Train && record_has(&has, id, missing))
            .map(|(id, &s)| (id.clone(), s));
        let Some((donor_id, donor_split)) = donor else { continue };
        let victim = provenance
            .iter()
            .find(|(id, &s)| s == SplitName::Train && !record_has(&has, id, missing))
            .map(|(id, _)| id.clone());
        let Some(victim_id) = victim else { continue };
        provenance.insert(donor_id, SplitName::Train);
        provenance.insert(victim_id, donor_split);
    }
}

fn record_has(has: &BTreeMap<&str, (bool, bool)>, id: &str, label: Label) -> bool {
    let &(normal, ischemic) = has.get(id).unwrap_or(&(false, false));
    match label {
        Label::Normal => normal,
        Label::Ischemic => ischemic,
    }
}

/// Oversamples the minority class by seeded duplication until
/// `minority >= ratio * majority` (1.0 = fully balanced).
pub fn balance_classes(
    mut windows: Vec<EcgWindow>,
    ratio: f64,
    seed: u64,
) -> Result<Vec<EcgWindow>, DatasetError> {
    assert!(ratio > 0.0 && ratio <= 1.0);
    let ischemic: Vec<usize> = (0..windows.len())
        .filter(|&i| windows[i].label == Label::Ischemic)
        .collect();
    let normal: Vec<usize> = (0..windows.len())
        .filter(|&i| windows[i].label == Label::Normal)
        .collect();
    if ischemic.is_empty() || normal.is_empty() {
        return Err(DatasetError::SingleClassInput);
    }
    let (minority, majority) = if ischemic.len() < normal.len() {
        (&ischemic, &normal)
    } else {
        (&normal, &ischemic)
    };
    let target = (ratio * majority.len() as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in minority.len()..target {
        let pick = minority[rng.random_range(0..minority.len())];
        windows.push(windows[pick].clone());
    }
    Ok(windows)
}
