//! Evaluation metrics: full-scale error statistics, noise-based resolution,
//! quantization levels, and the inter-axis crosstalk matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{Wrench, AXIS_LIMITS};

/// Conventional noise-floor multiplier for [`resolution_from_noise`].
pub const DEFAULT_SIGMA_MULTIPLIER: f64 = 3.0;

/// Per-axis full-scale spans (N, N·m) used to express errors as percentages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRanges {
    pub spans: [f64; 6],
}

impl Default for AxisRanges {
    /// Symmetric operating ranges: ±890, ±890, ±1435 N and ±27, ±27,
    /// ±45 N·m.
    fn default() -> Self {
        let mut spans = [0.0; 6];
        for (i, l) in AXIS_LIMITS.iter().enumerate() {
            spans[i] = 2.0 * l;
        }
        AxisRanges { spans }
    }
}

impl AxisRanges {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.spans.iter().enumerate() {
            if !(*s > 0.0) {
                return Err(Error::Domain(format!("axis {i} span must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Error statistics for one axis: percentages of the axis span plus the RMSE
/// in native units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisErrorStats {
    pub mean_pct: f64,
    pub std_pct: f64,
    pub max_pct: f64,
    pub rmse: f64,
}

/// Sample standard deviation (n − 1 divisor).
fn sample_std(series: &[f64]) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let ss: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Compares a decoded wrench series against an aligned reference: per axis,
/// the mean/std/max of 100·|test − ref|/span and the native-unit RMSE.
pub fn full_scale_error(
    test: &[Wrench],
    reference: &[Wrench],
    ranges: &AxisRanges,
) -> Result<[AxisErrorStats; 6]> {
    if test.len() != reference.len() {
        return Err(Error::LengthMismatch(test.len(), reference.len()));
    }
    if test.is_empty() {
        return Err(Error::DegenerateData("empty series".into()));
    }
    ranges.validate()?;
    let n = test.len() as f64;
    let mut out = [AxisErrorStats::default(); 6];
    for axis in 0..6 {
        let mut pcts = Vec::with_capacity(test.len());
        let mut ss = 0.0;
        for (t, r) in test.iter().zip(reference) {
            let e = t.to_vector()[axis] - r.to_vector()[axis];
            ss += e * e;
            pcts.push(100.0 * e.abs() / ranges.spans[axis]);
        }
        let mean = pcts.iter().sum::<f64>() / n;
        let std = if pcts.len() < 2 { 0.0 } else { sample_std(&pcts) };
        let max = pcts.iter().cloned().fold(0.0, f64::max);
        out[axis] = AxisErrorStats {
            mean_pct: mean,
            std_pct: std,
            max_pct: max,
            rmse: (ss / n).sqrt(),
        };
    }
    Ok(out)
}

/// Resolution as `sigma_multiplier` times the sample standard deviation of a
/// steady-state output window.
pub fn resolution_from_noise(series: &[f64], sigma_multiplier: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "noise window needs at least 2 samples, got {}",
            series.len()
        )));
    }
    if !(sigma_multiplier > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_multiplier must be > 0, got {sigma_multiplier}"
        )));
    }
    Ok(sigma_multiplier * sample_std(series))
}

/// Number of distinguishable output steps: floor(range / resolution).
pub fn quantization_levels(range: f64, resolution: f64) -> Result<u64> {
    if !(range > 0.0) {
        return Err(Error::Domain(format!("range must be > 0, got {range}")));
    }
    if !(resolution > 0.0) {
        return Err(Error::Domain(format!(
            "resolution must be > 0, got {resolution}"
        )));
    }
    Ok((range / resolution).floor() as u64)
}

/// Crosstalk matrix from six single-axis excitation runs.
///
/// `runs[i]` is the decoded output while only axis `i` is excited. Each
/// run's first `unloaded_prefix` samples define a per-axis baseline (median);
/// entry (i, j) is the peak |response − baseline| on axis j as a percentage
/// of axis j's span. The diagonal is normalized to exactly 100.
pub fn crosstalk_matrix(
    runs: &[Vec<Wrench>],
    ranges: &AxisRanges,
    unloaded_prefix: usize,
) -> Result<[[f64; 6]; 6]> {
    if runs.len() != 6 {
        return Err(Error::MissingRun(runs.len().min(5)));
    }
    ranges.validate()?;
    for (i, run) in runs.iter().enumerate() {
        if run.len() <= unloaded_prefix {
            return Err(Error::MissingRun(i));
        }
    }
    let mut m = [[0.0; 6]; 6];
    for (i, run) in runs.iter().enumerate() {
        let mut baseline = [0.0; 6];
        if unloaded_prefix > 0 {
            for axis in 0..6 {
                let mut vals: Vec<f64> =
                    run[..unloaded_prefix].iter().map(|w| w.to_vector()[axis]).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let k = vals.len();
                baseline[axis] = if k % 2 == 1 {
                    vals[k / 2]
                } else {
                    0.5 * (vals[k / 2 - 1] + vals[k / 2])
                };
            }
        }
        for axis in 0..6 {
            let peak = run
                .iter()
                .map(|w| (w.to_vector()[axis] - baseline[axis]).abs())
                .fold(0.0, f64::max);
            m[i][axis] = 100.0 * peak / ranges.spans[axis];
        }
        m[i][i] = 100.0;
    }
    Ok(m)
}

/// Aggregated evaluation results. Sections that were not computable from the
/// provided inputs (no steady-state window, no per-axis runs) stay `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ranges: AxisRanges,
    pub full_scale: [AxisErrorStats; 6],
    pub sigma_multiplier: Option<f64>,
    pub resolution: Option<[f64; 6]>,
    pub quantization_levels: Option<[u64; 6]>,
    pub crosstalk: Option<[[f64; 6]; 6]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    #[test]
    fn identical_series_give_zero_error() {
        let series: Vec<Wrench> =
            (0..50).map(|i| Wrench::single_axis(0, i as f64)).collect();
        let stats = full_scale_error(&series, &series, &AxisRanges::default()).unwrap();
        for s in stats {
            assert_eq!(s.mean_pct, 0.0);
            assert_eq!(s.std_pct, 0.0);
            assert_eq!(s.max_pct, 0.0);
            assert_eq!(s.rmse, 0.0);
        }
    }

    #[test]
    fn constant_fx_offset_is_a_tenth_percent() {
        // 1.78 N offset on Fx against the 1780 N span
        let reference = vec![Wrench::zero(); 20];
        let test = vec![Wrench::single_axis(0, 1.78); 20];
        let stats = full_scale_error(&test, &reference, &AxisRanges::default()).unwrap();
        assert_relative_eq!(stats[0].mean_pct, 0.1, max_relative = TOL);
        assert_relative_eq!(stats[0].max_pct, 0.1, max_relative = TOL);
        assert!(stats[0].std_pct.abs() < TOL);
        assert_relative_eq!(stats[0].rmse, 1.78, max_relative = TOL);
        for axis in 1..6 {
            assert_eq!(stats[axis].max_pct, 0.0);
        }
    }

    #[test]
    fn error_stats_obey_max_ge_mean_ge_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let reference: Vec<Wrench> = (0..200)
            .map(|_| Wrench::single_axis(rng.gen_range(0..6), rng.gen_range(-500.0..500.0)))
            .collect();
        let test: Vec<Wrench> = reference
            .iter()
            .map(|w| {
                let mut v = w.to_vector();
                for j in 0..6 {
                    v[j] += rng.gen_range(-2.0..2.0);
                }
                Wrench::from_vector(&v)
            })
            .collect();
        let stats = full_scale_error(&test, &reference, &AxisRanges::default()).unwrap();
        for s in stats {
            assert!(s.max_pct >= s.mean_pct);
            assert!(s.mean_pct >= 0.0);
        }
    }

    #[test]
    fn gaussian_noise_std_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sigma = 0.5;
        let series: Vec<f64> = (0..10_000)
            .map(|_| {
                let u1 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let res = resolution_from_noise(&series, 1.0).unwrap();
        assert!((res - sigma).abs() / sigma < 0.05, "std {res} vs sigma {sigma}");
    }

    #[test]
    fn resolution_scales_linearly_in_k_and_sigma() {
        let series = vec![1.0, 2.0, 1.5, 0.5, 2.5, 1.0];
        let r1 = resolution_from_noise(&series, 1.0).unwrap();
        let r3 = resolution_from_noise(&series, 3.0).unwrap();
        assert_relative_eq!(r3, 3.0 * r1, max_relative = TOL);

        let doubled: Vec<f64> = series.iter().map(|v| 2.0 * v).collect();
        let r2 = resolution_from_noise(&doubled, 1.0).unwrap();
        assert_relative_eq!(r2, 2.0 * r1, max_relative = TOL);

        // representative sensor numbers: sigma 0.0120 with k = 2.89
        let k = 2.89;
        assert_relative_eq!(0.0120 * k, 0.03468, max_relative = TOL);
    }

    #[test]
    fn constant_window_has_zero_resolution() {
        // dyadic constant: summation is exact, so the std is exactly zero
        let series = vec![4.25; 100];
        assert_eq!(resolution_from_noise(&series, 3.0).unwrap(), 0.0);
        assert!(matches!(
            resolution_from_noise(&[1.0], 3.0),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            resolution_from_noise(&series, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn quantization_level_examples() {
        // floor semantics on the reference range/resolution pairs
        assert_eq!(quantization_levels(1780.0, 0.0347).unwrap(), 51296);
        assert_eq!(quantization_levels(90.0, 0.00163).unwrap(), 55214);
        assert_eq!(quantization_levels(5.0, 5.0).unwrap(), 1);
        assert!(quantization_levels(0.0, 1.0).is_err());
        assert!(quantization_levels(1.0, 0.0).is_err());
    }

    #[test]
    fn quantization_levels_monotone_in_resolution() {
        let mut prev = u64::MAX;
        for i in 1..100 {
            let res = i as f64 * 0.01;
            let levels = quantization_levels(1780.0, res).unwrap();
            assert!(levels <= prev);
            prev = levels;
        }
    }

    fn single_axis_run(axis: usize, peak: f64, n: usize) -> Vec<Wrench> {
        (0..n)
            .map(|i| Wrench::single_axis(axis, peak * (i as f64 / (n - 1) as f64)))
            .collect()
    }

    #[test]
    fn decoupled_runs_give_identity_pattern() {
        let ranges = AxisRanges::default();
        let runs: Vec<Vec<Wrench>> =
            (0..6).map(|axis| single_axis_run(axis, 0.8 * AXIS_LIMITS[axis], 50)).collect();
        let m = crosstalk_matrix(&runs, &ranges, 0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    assert_eq!(m[i][j], 100.0);
                } else {
                    assert_eq!(m[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn injected_coupling_appears_at_its_known_ratio() {
        let ranges = AxisRanges::default();
        let mut runs: Vec<Vec<Wrench>> =
            (0..6).map(|axis| single_axis_run(axis, 0.8 * AXIS_LIMITS[axis], 50)).collect();
        // axis-0 excitation leaks 0.5% of the Fz span onto axis 2
        let leak = 0.005 * ranges.spans[2];
        for (k, w) in runs[0].iter_mut().enumerate() {
            w.fz = leak * (k as f64 / 49.0);
        }
        let m = crosstalk_matrix(&runs, &ranges, 0).unwrap();
        assert_relative_eq!(m[0][2], 0.5, max_relative = TOL);
        assert_eq!(m[1][2], 0.0);
    }

    #[test]
    fn crosstalk_is_invariant_to_time_shift() {
        let ranges = AxisRanges::default();
        let runs: Vec<Vec<Wrench>> =
            (0..6).map(|axis| single_axis_run(axis, 0.8 * AXIS_LIMITS[axis], 50)).collect();
        let m1 = crosstalk_matrix(&runs, &ranges, 0).unwrap();
        let shifted: Vec<Vec<Wrench>> = runs
            .iter()
            .map(|run| {
                let mut r = run.clone();
                r.rotate_right(17);
                r
            })
            .collect();
        let m2 = crosstalk_matrix(&shifted, &ranges, 0).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn baseline_offset_is_subtracted() {
        let ranges = AxisRanges::default();
        let mut runs: Vec<Vec<Wrench>> =
            (0..6).map(|axis| single_axis_run(axis, 0.8 * AXIS_LIMITS[axis], 50)).collect();
        // constant 5 N bias on fy throughout run 0, including its baseline
        // prefix: must not read as crosstalk
        let mut biased: Vec<Wrench> = vec![Wrench::single_axis(1, 5.0); 10];
        biased.extend(runs[0].iter().map(|w| {
            let mut v = *w;
            v.fy += 5.0;
            v
        }));
        runs[0] = biased;
        let m = crosstalk_matrix(&runs, &ranges, 10).unwrap();
        assert!(m[0][1].abs() < TOL, "bias leaked into crosstalk: {}", m[0][1]);
    }

    #[test]
    fn missing_runs_are_reported() {
        let ranges = AxisRanges::default();
        let mut runs: Vec<Vec<Wrench>> =
            (0..6).map(|axis| single_axis_run(axis, 100.0, 20)).collect();
        runs[3].clear();
        assert!(matches!(
            crosstalk_matrix(&runs, &ranges, 0),
            Err(Error::MissingRun(3))
        ));
        assert!(matches!(
            crosstalk_matrix(&runs[..4], &ranges, 0),
            Err(Error::MissingRun(_))
        ));
    }

    #[test]
    fn eval_report_serializes_round_trip() {
        let report = EvalReport {
            ranges: AxisRanges::default(),
            full_scale: [AxisErrorStats {
                mean_pct: 0.01,
                std_pct: 0.005,
                max_pct: 0.03,
                rmse: 0.2,
            }; 6],
            sigma_multiplier: Some(3.0),
            resolution: Some([0.03, 0.03, 0.03, 0.001, 0.001, 0.001]),
            quantization_levels: Some([51296, 51296, 55214, 54000, 54000, 55214]),
            crosstalk: None,
        };
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
