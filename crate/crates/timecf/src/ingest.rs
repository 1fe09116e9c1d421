//! Dataset ingestion: UCR-format text files, a synthetic desk-scale
//! benchmark with a planted discriminative bump, global min/max scaling,
//! and stratified train/test splitting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{ClassLabel, Dataset, Interval, LabeledInstance, TimeSeries};

/// Global min/max scaler mapping the fitted data range onto `[0, 1]`.
/// Values outside the fitted range map outside `[0, 1]`; no clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min_v: f64,
    max_v: f64,
}

impl MinMaxScaler {
    pub fn new(min_v: f64, max_v: f64) -> Result<Self> {
        if !(max_v > min_v) || !min_v.is_finite() || !max_v.is_finite() {
            return Err(Error::invalid_input(format!(
                "scaler needs max > min, got [{min_v}, {max_v}]"
            )));
        }
        Ok(MinMaxScaler { min_v, max_v })
    }

    /// Identity scaler over `[0, 1]`; used when data is already scaled.
    pub fn identity() -> Self {
        MinMaxScaler {
            min_v: 0.0,
            max_v: 1.0,
        }
    }

    /// Fits the global minimum and maximum over every value in `d`.
    pub fn fit(d: &Dataset) -> Result<Self> {
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for inst in d.instances() {
            for &v in inst.series.values() {
                min_v = min_v.min(v);
                max_v = max_v.max(v);
            }
        }
        if max_v <= min_v {
            return Err(Error::invalid_input(
                "cannot fit a scaler on constant-valued data",
            ));
        }
        Ok(MinMaxScaler { min_v, max_v })
    }

    pub fn min(&self) -> f64 {
        self.min_v
    }

    pub fn max(&self) -> f64 {
        self.max_v
    }

    pub fn transform_value(&self, x: f64) -> f64 {
        (x - self.min_v) / (self.max_v - self.min_v)
    }

    pub fn inverse_value(&self, x: f64) -> f64 {
        x * (self.max_v - self.min_v) + self.min_v
    }

    pub fn transform(&self, t: &TimeSeries) -> Result<TimeSeries> {
        let values = t.values().iter().map(|&v| self.transform_value(v)).collect();
        TimeSeries::with_id(values, t.id().map(str::to_owned))
    }

    pub fn inverse_transform(&self, t: &TimeSeries) -> Result<TimeSeries> {
        let values = t.values().iter().map(|&v| self.inverse_value(v)).collect();
        TimeSeries::with_id(values, t.id().map(str::to_owned))
    }

    pub fn transform_dataset(&self, d: &Dataset) -> Result<Dataset> {
        let instances = d
            .instances()
            .iter()
            .map(|inst| {
                Ok(LabeledInstance {
                    series: self.transform(&inst.series)?,
                    label: inst.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(instances)
    }
}

/// Parameters of the synthetic bump benchmark. Class 0 is a sine wave plus
/// noise; class 1 additionally carries a Gaussian-shaped bump supported on
/// `bump_interval`, so the discriminative region is known by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub length: usize,
    pub bump_interval: Interval,
    pub bump_height: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::invalid_input("n_per_class must be positive"));
        }
        if self.length == 0 {
            return Err(Error::invalid_input("length must be positive"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::invalid_input("noise_sigma must be >= 0"));
        }
        self.bump_interval.check_fits(self.length)
    }
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_per_class: 30,
            length: 100,
            bump_interval: Interval {
                start: 40,
                length: 20,
            },
            bump_height: 2.0,
            noise_sigma: 0.1,
            seed: 7,
        }
    }
}

/// Gaussian bump supported exactly on the interval: zero outside, peak
/// `height` at the interval center.
fn bump_value(t: usize, iv: &Interval, height: f64) -> f64 {
    if t < iv.start || t >= iv.end() {
        return 0.0;
    }
    let center = iv.start as f64 + (iv.length as f64 - 1.0) / 2.0;
    let sigma = (iv.length as f64 / 6.0).max(0.5);
    let d = t as f64 - center;
    height * (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Generates the synthetic bump dataset. Instances alternate class 0 and
/// class 1 so neither class dominates low source indices (shapelet
/// tie-breaking is index-based). Deterministic given `spec.seed`.
pub fn make_synthetic_bump(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::invalid_input(e.to_string()))?;
    let n = spec.length;
    let mut instances = Vec::with_capacity(2 * spec.n_per_class);
    for pair in 0..spec.n_per_class {
        for class in 0..2u32 {
            let mut values = Vec::with_capacity(n);
            for t in 0..n {
                let base = (2.0 * std::f64::consts::PI * t as f64 / n as f64).sin();
                let noise = if spec.noise_sigma > 0.0 {
                    normal.sample(&mut rng)
                } else {
                    0.0
                };
                let bump = if class == 1 {
                    bump_value(t, &spec.bump_interval, spec.bump_height)
                } else {
                    0.0
                };
                values.push(base + bump + noise);
            }
            instances.push(LabeledInstance {
                series: TimeSeries::with_id(
                    values,
                    Some(format!("synth-{class}-{pair:03}")),
                )?,
                label: ClassLabel(class),
            });
        }
    }
    Dataset::new(instances)
}

fn detect_delimiter(first_line: &str) -> char {
    if first_line.contains('\t') {
        '\t'
    } else {
        ','
    }
}

/// Parses a UCR-format text file: one instance per line, first field the
/// class label, remaining fields the values. Tab or comma delimited,
/// auto-detected from the first line. Raw labels (e.g. `-1/1` or `1/2`)
/// are normalized to `0..K-1` by ascending raw value; row order is kept.
pub fn parse_ucr_file(path: impl AsRef<Path>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_ucr_str(&text)
}

/// Same as [`parse_ucr_file`] but over an in-memory string.
pub fn parse_ucr_str(text: &str) -> Result<Dataset> {
    let mut raw_rows: Vec<(i64, Vec<f64>)> = Vec::new();
    let mut delimiter = None;
    let mut expected_len = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let delim = *delimiter.get_or_insert_with(|| detect_delimiter(line));
        let mut fields = line.split(delim).filter(|f| !f.trim().is_empty());
        let label_tok = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing class label"))?;
        let label_f: f64 = label_tok
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-numeric label {label_tok:?}")))?;
        if !label_f.is_finite() || label_f.fract() != 0.0 {
            return Err(Error::parse(
                line_no,
                format!("label {label_tok:?} is not an integer"),
            ));
        }
        let mut values = Vec::new();
        for tok in fields {
            let v: f64 = tok.trim().parse().map_err(|_| {
                Error::parse(line_no, format!("non-numeric value {tok:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value {tok:?}")));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::parse(line_no, "row has a label but no values"));
        }
        match expected_len {
            None => expected_len = Some(values.len()),
            Some(n) if n != values.len() => {
                return Err(Error::parse(
                    line_no,
                    format!("row has {} values, expected {n}", values.len()),
                ));
            }
            _ => {}
        }
        raw_rows.push((label_f as i64, values));
    }
    if raw_rows.is_empty() {
        return Err(Error::parse(1, "file contains no data rows"));
    }

    // normalize raw labels to 0..K-1 by ascending raw value
    let mut alphabet: Vec<i64> = raw_rows.iter().map(|(l, _)| *l).collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    let mapping: BTreeMap<i64, u32> = alphabet
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, i as u32))
        .collect();

    let instances = raw_rows
        .into_iter()
        .enumerate()
        .map(|(row, (raw_label, values))| {
            Ok(LabeledInstance {
                series: TimeSeries::with_id(values, Some(format!("row-{row}")))?,
                label: ClassLabel(mapping[&raw_label]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(instances)
}

/// Writes a dataset back to UCR rows (tab-delimited). Values are printed in
/// Rust's shortest round-trip form, so a re-parse reproduces them exactly.
pub fn write_ucr_file(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    for inst in d.instances() {
        write!(out, "{}", inst.label.0)?;
        for v in inst.series.values() {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Splits `d` into `(train, test)` preserving per-class proportions to
/// rounding. Within each part the original instance order is kept.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid_input(
            "test_fraction must lie strictly between 0 and 1",
        ));
    }
    let mut by_class: BTreeMap<ClassLabel, Vec<usize>> = BTreeMap::new();
    for (i, inst) in d.instances().iter().enumerate() {
        by_class.entry(inst.label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_mask = vec![false; d.len()];
    for (label, indices) in &by_class {
        if indices.len() < 2 {
            return Err(Error::usage(format!(
                "class {label} has {} instance(s); need >= 2 to split",
                indices.len()
            )));
        }
        let mut shuffled = indices.clone();
        // Fisher-Yates, seeded
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        let n_test = ((indices.len() as f64) * test_fraction).round() as usize;
        let n_test = n_test.clamp(1, indices.len() - 1);
        for &idx in shuffled.iter().take(n_test) {
            test_mask[idx] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, inst) in d.instances().iter().enumerate() {
        if test_mask[i] {
            test.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }
    Ok((Dataset::new(train)?, Dataset::new(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_two_rows_tab_delimited() {
        let d = parse_ucr_str("1\t0.1\t0.2\n2\t0.3\t0.4\n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.series_length(), 2);
        assert_eq!(d.label_alphabet(), vec![ClassLabel(0), ClassLabel(1)]);
        assert_eq!(d.instances()[0].series.values(), &[0.1, 0.2]);
        assert_eq!(d.instances()[1].label, ClassLabel(1));
    }

    #[test]
    fn parse_comma_delimited_and_negative_labels() {
        let d = parse_ucr_str("-1,1.5,2.5,3.5\n1,0.0,1.0,2.0\n-1,9.0,8.0,7.0\n").unwrap();
        assert_eq!(d.len(), 3);
        // raw -1 -> 0, raw 1 -> 1
        assert_eq!(d.instances()[0].label, ClassLabel(0));
        assert_eq!(d.instances()[1].label, ClassLabel(1));
        assert_eq!(d.instances()[2].label, ClassLabel(0));
    }

    #[test]
    fn parse_errors_name_the_line() {
        let ragged = parse_ucr_str("1\t0.1\t0.2\n2\t0.3\n");
        match ragged {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let bad_token = parse_ucr_str("1\t0.1\n2\tabc\n");
        match bad_token {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_ucr_str(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_ucr_str("1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn write_then_parse_round_trips_exactly() {
        let spec = SyntheticSpec {
            n_per_class: 3,
            length: 16,
            ..SyntheticSpec::default()
        };
        let spec = SyntheticSpec {
            bump_interval: Interval { start: 4, length: 6 },
            ..spec
        };
        let d = make_synthetic_bump(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.tsv");
        write_ucr_file(&d, &path).unwrap();
        let back = parse_ucr_file(&path).unwrap();
        assert_eq!(back.len(), d.len());
        for (a, b) in back.instances().iter().zip(d.instances()) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.series.values(), b.series.values());
        }
    }

    #[test]
    fn synthetic_bump_degenerate_and_noise_free_cases() {
        let base = SyntheticSpec {
            n_per_class: 2,
            length: 24,
            bump_interval: Interval { start: 8, length: 8 },
            bump_height: 0.0,
            noise_sigma: 0.0,
            seed: 1,
        };
        let d = make_synthetic_bump(&base).unwrap();
        // zero noise, zero bump: the two classes are identical outside the label
        let class0: Vec<_> = d
            .instances()
            .iter()
            .filter(|i| i.label == ClassLabel(0))
            .collect();
        let class1: Vec<_> = d
            .instances()
            .iter()
            .filter(|i| i.label == ClassLabel(1))
            .collect();
        assert_eq!(class0[0].series.values(), class1[0].series.values());

        let bumped = SyntheticSpec {
            bump_height: 2.0,
            ..base
        };
        let d = make_synthetic_bump(&bumped).unwrap();
        let c0 = d
            .instances()
            .iter()
            .find(|i| i.label == ClassLabel(0))
            .unwrap();
        let c1 = d
            .instances()
            .iter()
            .find(|i| i.label == ClassLabel(1))
            .unwrap();
        for t in 0..bumped.length {
            let inside = t >= 8 && t < 16;
            let differ = (c0.series.values()[t] - c1.series.values()[t]).abs() > 0.0;
            if !inside {
                assert!(!differ, "classes differ outside the bump at t={t}");
            }
        }
        // the bump peak actually shows up
        assert!((c1.series.values()[11] - c0.series.values()[11]).abs() > 1.0);
    }

    #[test]
    fn synthetic_bump_is_deterministic() {
        let spec = SyntheticSpec::default();
        let a = make_synthetic_bump(&spec).unwrap();
        let b = make_synthetic_bump(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaler_linear_map_and_round_trip() {
        let rows: Vec<LabeledInstance> = (0..=10)
            .map(|v| LabeledInstance {
                series: TimeSeries::new(vec![v as f64, 0.0]).unwrap(),
                label: ClassLabel(0),
            })
            .collect();
        let d = Dataset::new(rows).unwrap();
        let s = MinMaxScaler::fit(&d).unwrap();
        assert_eq!(s.transform_value(5.0), 0.5);
        assert_eq!(s.transform_value(0.0), 0.0);
        assert_eq!(s.transform_value(10.0), 1.0);
        // above the fitted max: no clamping
        assert!(s.transform_value(12.0) > 1.0);

        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = rng.gen_range(0.0..10.0);
            assert!((s.inverse_value(s.transform_value(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn scaler_rejects_constant_data() {
        let d = Dataset::new(vec![LabeledInstance {
            series: TimeSeries::new(vec![2.0, 2.0, 2.0]).unwrap(),
            label: ClassLabel(0),
        }])
        .unwrap();
        assert!(MinMaxScaler::fit(&d).is_err());
        assert!(MinMaxScaler::new(1.0, 1.0).is_err());
    }

    #[test]
    fn stratified_split_preserves_proportions_and_partitions() {
        let d = make_synthetic_bump(&SyntheticSpec {
            n_per_class: 30,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let (train, test) = stratified_split(&d, 0.5, 11).unwrap();
        assert_eq!(train.count_label(ClassLabel(0)), 15);
        assert_eq!(train.count_label(ClassLabel(1)), 15);
        assert_eq!(test.count_label(ClassLabel(0)), 15);
        assert_eq!(test.count_label(ClassLabel(1)), 15);

        // union is the original multiset (compare by id)
        let mut ids: Vec<_> = train
            .instances()
            .iter()
            .chain(test.instances())
            .map(|i| i.series.id().unwrap().to_owned())
            .collect();
        ids.sort();
        let mut orig: Vec<_> = d
            .instances()
            .iter()
            .map(|i| i.series.id().unwrap().to_owned())
            .collect();
        orig.sort();
        assert_eq!(ids, orig);

        // determinism
        let (t2, s2) = stratified_split(&d, 0.5, 11).unwrap();
        assert_eq!(t2, train);
        assert_eq!(s2, test);
    }

    #[test]
    fn stratified_split_rejects_tiny_classes() {
        let d = parse_ucr_str("1\t0.0\t1.0\n2\t1.0\t0.0\n2\t0.5\t0.5\n").unwrap();
        assert!(matches!(
            stratified_split(&d, 0.5, 0),
            Err(Error::Usage(_))
        ));
    }
}
