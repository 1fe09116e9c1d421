//! Domain types shared by every stage of the pipeline: univariate time
//! series, labeled datasets, intervals, the black-box classifier contract,
//! and the elementary distance/segment operations built on them.
//!
//! All types here are immutable after construction and safe to share across
//! worker threads; the free functions are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-length univariate time series of finite real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    id: Option<String>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_id(values, None)
    }

    pub fn with_id(values: Vec<f64>, id: Option<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_input("time series must be non-empty"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid_input(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        Ok(TimeSeries { values, id })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }
}

/// A small non-negative class category. Labels are normalized to
/// `0..K-1` at ingestion regardless of the raw file encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub u32);

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A time series together with its class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub series: TimeSeries,
    pub label: ClassLabel,
}

/// A non-empty collection of equal-length labeled instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    instances: Vec<LabeledInstance>,
    series_length: usize,
}

impl Dataset {
    /// Builds a dataset, enforcing non-emptiness and uniform series length.
    pub fn new(instances: Vec<LabeledInstance>) -> Result<Self> {
        let first = instances
            .first()
            .ok_or_else(|| Error::invalid_input("dataset must be non-empty"))?;
        let series_length = first.series.len();
        for (i, inst) in instances.iter().enumerate() {
            if inst.series.len() != series_length {
                return Err(Error::invalid_input(format!(
                    "instance {i} has length {} but the dataset length is {series_length}",
                    inst.series.len()
                )));
            }
        }
        Ok(Dataset {
            instances,
            series_length,
        })
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn series_length(&self) -> usize {
        self.series_length
    }

    /// Distinct labels present, ascending.
    pub fn label_alphabet(&self) -> Vec<ClassLabel> {
        let mut labels: Vec<ClassLabel> = self.instances.iter().map(|i| i.label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    pub fn n_classes(&self) -> usize {
        self.label_alphabet().len()
    }

    pub fn count_label(&self, label: ClassLabel) -> usize {
        self.instances.iter().filter(|i| i.label == label).count()
    }

    /// New dataset restricted to instances whose label satisfies `keep`.
    /// Errors if nothing survives the filter.
    pub fn filter_by_label(&self, keep: impl Fn(ClassLabel) -> bool) -> Result<Dataset> {
        let kept: Vec<LabeledInstance> = self
            .instances
            .iter()
            .filter(|i| keep(i.label))
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(Error::usage("label filter removed every instance"));
        }
        Dataset::new(kept)
    }

    /// Order-independent fingerprint of the dataset content; used to verify
    /// which subset a model was trained on.
    pub fn fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let mut h = DefaultHasher::new();
        self.series_length.hash(&mut h);
        self.instances.len().hash(&mut h);
        for inst in &self.instances {
            inst.label.0.hash(&mut h);
            for v in inst.series.values() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// A half-open index range `[start, start + length)` within a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub length: usize,
}

impl Interval {
    pub fn new(start: usize, length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid_input("interval length must be >= 1"));
        }
        Ok(Interval { start, length })
    }

    pub fn end(&self) -> usize {
        self.start + self.length
    }

    /// Checks that the interval addresses valid indices of a series of
    /// length `series_len`.
    pub fn check_fits(&self, series_len: usize) -> Result<()> {
        if self.end() > series_len {
            return Err(Error::IntervalOutOfBounds {
                start: self.start,
                length: self.length,
                series_len,
            });
        }
        Ok(())
    }

    /// Number of indices shared with `other`.
    pub fn overlap_len(&self, other: &Interval) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        hi.saturating_sub(lo)
    }
}

/// Behavioral contract for a to-be-explained classifier: a pure, deterministic
/// mapping from a series to a class label for a fixed trained state.
pub trait Predictor: Send + Sync {
    fn predict(&self, series: &TimeSeries) -> Result<ClassLabel>;
}

fn check_equal_len(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Manhattan distance between two equal-length series.
pub fn l1_distance(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    check_equal_len(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Number of positions where the two series differ by more than `eps`.
pub fn hamming_distance(a: &TimeSeries, b: &TimeSeries, eps: f64) -> Result<usize> {
    check_equal_len(a, b)?;
    if eps < 0.0 {
        return Err(Error::invalid_input("eps must be >= 0"));
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .filter(|(x, y)| (*x - *y).abs() > eps)
        .count())
}

/// Copies the values addressed by `iv` out of `t`.
pub fn crop(t: &TimeSeries, iv: &Interval) -> Result<Vec<f64>> {
    iv.check_fits(t.len())?;
    Ok(t.values()[iv.start..iv.end()].to_vec())
}

/// Returns a new series equal to `t` outside `iv` and to `seg` inside it.
pub fn replace_segment(t: &TimeSeries, seg: &[f64], iv: &Interval) -> Result<TimeSeries> {
    iv.check_fits(t.len())?;
    if seg.len() != iv.length {
        return Err(Error::LengthMismatch {
            left: seg.len(),
            right: iv.length,
        });
    }
    let mut values = t.values().to_vec();
    values[iv.start..iv.end()].copy_from_slice(seg);
    TimeSeries::with_id(values, t.id().map(str::to_owned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec()).unwrap()
    }

    #[test]
    fn series_rejects_empty_and_non_finite() {
        assert!(TimeSeries::new(vec![]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn l1_identity_and_hand_sum() {
        let a = ts(&[1.0, 2.0, 3.0]);
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        let b = ts(&[0.0, 0.0]);
        let c = ts(&[1.0, -1.0]);
        assert_eq!(l1_distance(&b, &c).unwrap(), 2.0);
    }

    #[test]
    fn l1_matches_elementwise_sum_oracle_on_seeded_series() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let a: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut oracle = 0.0;
        for i in 0..50 {
            oracle += (a[i] - b[i]).abs();
        }
        assert_eq!(l1_distance(&ts(&a), &ts(&b)).unwrap(), oracle);
    }

    #[test]
    fn l1_length_mismatch_is_an_error() {
        assert!(matches!(
            l1_distance(&ts(&[1.0]), &ts(&[1.0, 2.0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn hamming_identity_and_hand_count() {
        let x = ts(&[0.5, 0.25, -1.0]);
        assert_eq!(hamming_distance(&x, &x, 1e-8).unwrap(), 0);
        let a = ts(&[0.0, 0.0, 0.0]);
        let b = ts(&[0.0, 5.0, 5.0]);
        assert_eq!(hamming_distance(&a, &b, 1e-8).unwrap(), 2);
    }

    #[test]
    fn hamming_matches_per_position_oracle_on_seeded_pair() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let a: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| if rng.gen_bool(0.5) { *v } else { v + 0.5 })
            .collect();
        let eps = 1e-8;
        let mut oracle = 0usize;
        for i in 0..a.len() {
            if (a[i] - b[i]).abs() > eps {
                oracle += 1;
            }
        }
        assert_eq!(hamming_distance(&ts(&a), &ts(&b), eps).unwrap(), oracle);
    }

    #[test]
    fn crop_direct_slice_and_full_range() {
        let t = ts(&[1.0, 2.0, 3.0, 4.0]);
        let iv = Interval::new(1, 2).unwrap();
        assert_eq!(crop(&t, &iv).unwrap(), vec![2.0, 3.0]);
        let full = Interval::new(0, 4).unwrap();
        assert_eq!(crop(&t, &full).unwrap(), t.values());
    }

    #[test]
    fn crop_matches_index_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let vals: Vec<f64> = (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t = ts(&vals);
        let start = rng.gen_range(0..30);
        let length = rng.gen_range(1..=(40 - start));
        let iv = Interval::new(start, length).unwrap();
        let got = crop(&t, &iv).unwrap();
        let mut oracle = Vec::new();
        for i in start..start + length {
            oracle.push(vals[i]);
        }
        assert_eq!(got, oracle);
    }

    #[test]
    fn crop_out_of_bounds_is_an_error() {
        let t = ts(&[1.0, 2.0, 3.0]);
        let iv = Interval::new(2, 2).unwrap();
        assert!(matches!(
            crop(&t, &iv),
            Err(Error::IntervalOutOfBounds { .. })
        ));
    }

    #[test]
    fn replace_hand_edit_and_self_identity() {
        let t = ts(&[0.0, 0.0, 0.0, 0.0]);
        let iv = Interval::new(1, 2).unwrap();
        let out = replace_segment(&t, &[9.0, 9.0], &iv).unwrap();
        assert_eq!(out.values(), &[0.0, 9.0, 9.0, 0.0]);

        let x = ts(&[1.0, -2.0, 3.5, 0.0, 7.0]);
        let iv = Interval::new(1, 3).unwrap();
        let seg = crop(&x, &iv).unwrap();
        assert_eq!(replace_segment(&x, &seg, &iv).unwrap(), x);
    }

    #[test]
    fn replace_rejects_bad_segment_lengths() {
        let t = ts(&[0.0, 0.0, 0.0]);
        let iv = Interval::new(0, 2).unwrap();
        assert!(replace_segment(&t, &[1.0], &iv).is_err());
        let oob = Interval::new(2, 2).unwrap();
        assert!(replace_segment(&t, &[1.0, 1.0], &oob).is_err());
    }

    #[test]
    fn dataset_enforces_uniform_length_and_derives_alphabet() {
        let mk = |vals: &[f64], l: u32| LabeledInstance {
            series: ts(vals),
            label: ClassLabel(l),
        };
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![mk(&[1.0, 2.0], 0), mk(&[1.0], 1)]).is_err());
        let d = Dataset::new(vec![
            mk(&[1.0, 2.0], 1),
            mk(&[3.0, 4.0], 0),
            mk(&[5.0, 6.0], 1),
        ])
        .unwrap();
        assert_eq!(d.label_alphabet(), vec![ClassLabel(0), ClassLabel(1)]);
        assert_eq!(d.series_length(), 2);
        assert_eq!(d.count_label(ClassLabel(1)), 2);
    }

    proptest! {
        #[test]
        fn distances_symmetric_and_identity(
            a in proptest::collection::vec(-100.0f64..100.0, 4..40),
            b in proptest::collection::vec(-100.0f64..100.0, 4..40),
        ) {
            let n = a.len().min(b.len());
            let x = ts(&a[..n]);
            let y = ts(&b[..n]);
            prop_assert_eq!(l1_distance(&x, &y).unwrap(), l1_distance(&y, &x).unwrap());
            prop_assert_eq!(
                hamming_distance(&x, &y, 0.0).unwrap(),
                hamming_distance(&y, &x, 0.0).unwrap()
            );
            prop_assert_eq!(l1_distance(&x, &x).unwrap(), 0.0);
            prop_assert_eq!(hamming_distance(&x, &x, 0.0).unwrap(), 0);
            // identity of indiscernibles at eps = 0
            if hamming_distance(&x, &y, 0.0).unwrap() == 0 {
                prop_assert_eq!(x.values(), y.values());
            }
        }

        #[test]
        fn crop_of_replace_returns_segment_and_outside_untouched(
            vals in proptest::collection::vec(-10.0f64..10.0, 4..50),
            seg in proptest::collection::vec(-10.0f64..10.0, 1..50),
            start in 0usize..50,
        ) {
            let n = vals.len();
            let len = seg.len().min(n);
            let start = start % (n - len + 1);
            let seg = &seg[..len];
            let t = ts(&vals);
            let iv = Interval::new(start, len).unwrap();
            let replaced = replace_segment(&t, seg, &iv).unwrap();
            let cropped = crop(&replaced, &iv).unwrap();
            prop_assert_eq!(cropped.as_slice(), seg);
            for i in 0..n {
                if i < start || i >= start + len {
                    prop_assert_eq!(replaced.values()[i], vals[i]);
                }
            }
            prop_assert!(hamming_distance(&replaced, &t, 0.0).unwrap() <= iv.length);
            // the input series is untouched
            prop_assert_eq!(t.values(), vals.as_slice());
        }
    }
}
