//! Joint six-axis calibration.
//!
//! The decode map has two stages: each channel's normalized counts pass
//! through a degree-2/2 rational (denominator constant pinned to 1), then a
//! 6×7 matrix mixes the six channel outputs plus a constant bias feature into
//! the wrench. Calibration fits all 66 free parameters jointly by damped
//! least squares from a deterministic three-stage seed; each channel's
//! rational is gauge-fixed so its output is zero at the unloaded operating
//! point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitting::solver::{levenberg_marquardt, LeastSquaresProblem, LmOptions};
use crate::fitting::POLE_EPS;
use crate::synth::{Dataset, Wrench, AXIS_LIMITS};

/// On-disk calibration format version.
pub const FORMAT_VERSION: u32 = 1;

/// Free parameters: 6 channels × (d₁, d₂, d₄, d₅) + 6×7 matrix entries.
const PARAM_LEN: usize = 24 + 42;

/// Peak-to-peak span of each wrench axis (twice the symmetric limit).
pub fn axis_spans() -> [f64; 6] {
    let mut s = [0.0; 6];
    for (i, l) in AXIS_LIMITS.iter().enumerate() {
        s[i] = 2.0 * l;
    }
    s
}

/// Per-channel affine count normalization x = (counts − offset) · scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawScale {
    pub offset: [f64; 6],
    pub scale: [f64; 6],
}

/// A fitted sensor calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: u32,
    /// Hash of the coil/kinematics description the calibration was trained
    /// for; checked (when provided) on load.
    pub geometry_hash: String,
    pub raw_scale: RawScale,
    /// Per-channel rational coefficients (d₁…d₅, denominator constant 1).
    pub channel_coeffs: [[f64; 5]; 6],
    /// Wrench mixing matrix, row-major 6×7 (column 6 weights the constant
    /// bias feature).
    pub matrix_a: [[f64; 7]; 6],
    /// Count range [lo, hi] seen per channel during training; decodes outside
    /// it are flagged as extrapolated.
    pub raw_domain: [[f64; 2]; 6],
}

/// Fit summary returned alongside the calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalReport {
    pub n_samples: usize,
    pub unloaded_prefix: usize,
    pub iterations: usize,
    pub converged: bool,
    /// RMSE of the span-weighted residual vector.
    pub weighted_rmse: f64,
    /// Training RMSE per axis in native units (N, N·m).
    pub per_axis_rmse: [f64; 6],
    /// Observed per-axis excitation as a fraction of the full span.
    pub excitation_fractions: [f64; 6],
}

/// Options for [`calibrate`].
#[derive(Clone, Debug)]
pub struct CalibrationOptions {
    pub max_iters: usize,
    /// Minimum per-axis excitation (fraction of the axis span) the training
    /// data must contain.
    pub min_excitation: f64,
    /// Recorded in the output for provenance checks on load.
    pub geometry_hash: String,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            max_iters: 200,
            min_excitation: 0.05,
            geometry_hash: String::new(),
        }
    }
}

/// One decoded sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedSample {
    pub wrench: Wrench,
    /// Set when any channel's counts fall outside the training range.
    pub extrapolated: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Gauged rational value and its partials with respect to (d₁, d₂, d₄, d₅),
/// with d₃ = −(d₁x₀² + d₂x₀) substituted so y(x₀) = 0.
struct RatParts {
    y: f64,
    dy: [f64; 4],
}

fn rat_parts(theta: &[f64; 4], x: f64, x0: f64) -> Result<RatParts> {
    let den = theta[2] * x * x + theta[3] * x + 1.0;
    if den.abs() < POLE_EPS {
        return Err(Error::Pole(x));
    }
    let d3 = -(theta[0] * x0 * x0 + theta[1] * x0);
    let num = theta[0] * x * x + theta[1] * x + d3;
    let y = num / den;
    Ok(RatParts {
        y,
        dy: [
            (x * x - x0 * x0) / den,
            (x - x0) / den,
            -num * x * x / (den * den),
            -num * x / (den * den),
        ],
    })
}

fn rat_value(theta: &[f64; 4], x: f64, x0: f64) -> Result<f64> {
    Ok(rat_parts(theta, x, x0)?.y)
}

struct JointProblem<'a> {
    /// Normalized counts, one row per sample.
    x: &'a [[f64; 6]],
    /// Target wrenches as vectors.
    w: &'a [[f64; 6]],
    x0: [f64; 6],
    wgt: [f64; 6],
}

fn unpack(p: &DVector<f64>) -> ([[f64; 4]; 6], [[f64; 7]; 6]) {
    let mut thetas = [[0.0; 4]; 6];
    for i in 0..6 {
        for m in 0..4 {
            thetas[i][m] = p[4 * i + m];
        }
    }
    let mut a = [[0.0; 7]; 6];
    for j in 0..6 {
        for c in 0..7 {
            a[j][c] = p[24 + 7 * j + c];
        }
    }
    (thetas, a)
}

fn pack(thetas: &[[f64; 4]; 6], a: &[[f64; 7]; 6]) -> DVector<f64> {
    let mut p = DVector::zeros(PARAM_LEN);
    for i in 0..6 {
        for m in 0..4 {
            p[4 * i + m] = thetas[i][m];
        }
    }
    for j in 0..6 {
        for c in 0..7 {
            p[24 + 7 * j + c] = a[j][c];
        }
    }
    p
}

impl LeastSquaresProblem for JointProblem<'_> {
    fn residual_len(&self) -> usize {
        self.x.len() * 6
    }
    fn param_len(&self) -> usize {
        PARAM_LEN
    }

    fn residuals(&self, params: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let (thetas, a) = unpack(params);
        let mut y = [0.0; 7];
        y[6] = 1.0;
        for (s, (xs, ws)) in self.x.iter().zip(self.w).enumerate() {
            for i in 0..6 {
                y[i] = rat_value(&thetas[i], xs[i], self.x0[i])?;
            }
            for j in 0..6 {
                let mut pred = 0.0;
                for c in 0..7 {
                    pred += a[j][c] * y[c];
                }
                out[6 * s + j] = (pred - ws[j]) * self.wgt[j];
            }
        }
        Ok(())
    }

    fn jacobian(&self, params: &DVector<f64>, out: &mut DMatrix<f64>) -> Result<()> {
        let (thetas, a) = unpack(params);
        out.fill(0.0);
        for (s, xs) in self.x.iter().enumerate() {
            let mut parts = Vec::with_capacity(6);
            for i in 0..6 {
                parts.push(rat_parts(&thetas[i], xs[i], self.x0[i])?);
            }
            for j in 0..6 {
                let row = 6 * s + j;
                for c in 0..6 {
                    out[(row, 24 + 7 * j + c)] = parts[c].y * self.wgt[j];
                }
                out[(row, 24 + 7 * j + 6)] = self.wgt[j];
                for i in 0..6 {
                    for m in 0..4 {
                        out[(row, 4 * i + m)] = a[j][i] * parts[i].dy[m] * self.wgt[j];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Feature matrix Y (n×7): gauged rational per channel plus the constant 1.
fn feature_matrix(x: &[[f64; 6]], thetas: &[[f64; 4]; 6], x0: &[f64; 6]) -> Result<DMatrix<f64>> {
    let mut y = DMatrix::zeros(x.len(), 7);
    for (s, xs) in x.iter().enumerate() {
        for i in 0..6 {
            y[(s, i)] = rat_value(&thetas[i], xs[i], x0[i])?;
        }
        y[(s, 6)] = 1.0;
    }
    Ok(y)
}

/// Unweighted per-axis linear LS for the mixing matrix given the features.
fn solve_matrix(y: &DMatrix<f64>, w: &[[f64; 6]]) -> Result<[[f64; 7]; 6]> {
    let svd = y.clone().svd(true, true);
    let mut a = [[0.0; 7]; 6];
    for j in 0..6 {
        let b = DVector::from_iterator(w.len(), w.iter().map(|ws| ws[j]));
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Model(format!("matrix seed solve failed: {e}")))?;
        for c in 0..7 {
            a[j][c] = sol[c];
        }
    }
    Ok(a)
}

/// Fits a calibration from raw converter counts and reference wrenches.
///
/// `unloaded_prefix` is the number of leading unloaded samples that define
/// each channel's operating point; `None` auto-detects the leading run of
/// zero wrenches. Residuals are weighted by the reciprocal axis spans so
/// forces and torques contribute comparably.
pub fn calibrate(
    counts: &[[u32; 6]],
    wrenches: &[Wrench],
    unloaded_prefix: Option<usize>,
    opts: &CalibrationOptions,
) -> Result<(Calibration, CalReport)> {
    let n = counts.len();
    if n != wrenches.len() {
        return Err(Error::LengthMismatch(n, wrenches.len()));
    }
    if n * 6 < 2 * PARAM_LEN {
        return Err(Error::DegenerateData(format!(
            "need at least {} samples to fit {PARAM_LEN} parameters, got {n}",
            2 * PARAM_LEN / 6
        )));
    }

    // per-channel count normalization from the observed range
    let mut offset = [0.0; 6];
    let mut scale = [0.0; 6];
    let mut raw_domain = [[0.0; 2]; 6];
    for ch in 0..6 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in counts {
            lo = lo.min(row[ch] as f64);
            hi = hi.max(row[ch] as f64);
        }
        if hi <= lo {
            return Err(Error::DegenerateData(format!(
                "channel {ch} is constant at {lo} counts"
            )));
        }
        offset[ch] = lo;
        scale[ch] = 1.0 / (hi - lo);
        raw_domain[ch] = [lo, hi];
    }
    let x: Vec<[f64; 6]> = counts
        .iter()
        .map(|row| {
            let mut xs = [0.0; 6];
            for ch in 0..6 {
                xs[ch] = (row[ch] as f64 - offset[ch]) * scale[ch];
            }
            xs
        })
        .collect();
    let w: Vec<[f64; 6]> = wrenches.iter().map(|wr| wr.to_vector().into()).collect();

    let n0 = match unloaded_prefix {
        Some(k) => {
            if k > n {
                return Err(Error::Domain(format!(
                    "unloaded_prefix {k} exceeds sample count {n}"
                )));
            }
            k
        }
        None => wrenches.iter().take_while(|wr| wr.is_zero()).count(),
    };

    // unloaded operating point: per-channel median over the prefix (or the
    // whole acquisition when no unloaded prefix exists)
    let mut x0 = [0.0; 6];
    for ch in 0..6 {
        let mut vals: Vec<f64> = if n0 > 0 {
            x[..n0].iter().map(|xs| xs[ch]).collect()
        } else {
            x.iter().map(|xs| xs[ch]).collect()
        };
        x0[ch] = median(&mut vals);
    }

    let spans = axis_spans();
    let mut wgt = [0.0; 6];
    let mut excitation = [0.0; 6];
    for axis in 0..6 {
        wgt[axis] = 1.0 / spans[axis];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for ws in &w {
            lo = lo.min(ws[axis]);
            hi = hi.max(ws[axis]);
        }
        excitation[axis] = (hi - lo) / spans[axis];
        if excitation[axis] < opts.min_excitation {
            return Err(Error::InsufficientExcitation {
                axis,
                fraction: excitation[axis],
                required: opts.min_excitation,
            });
        }
    }

    // --- seeding ---------------------------------------------------------
    // stage 1: identity-like rationals (y = x − x₀), matrix by linear LS
    let mut thetas = [[0.0, 1.0, 0.0, 0.0]; 6];
    let mut y = feature_matrix(&x, &thetas, &x0)?;
    let mut a = solve_matrix(&y, &w)?;

    // stage 2: per-channel linearized rational refinement against the
    // residual projected onto that channel's matrix column
    for i in 0..6 {
        let a_col: Vec<f64> = (0..6).map(|j| a[j][i]).collect();
        let denom: f64 = a_col.iter().map(|v| v * v).sum();
        if denom < 1e-30 {
            continue;
        }
        let mut t = vec![0.0; n];
        for s in 0..n {
            let mut dot = 0.0;
            for j in 0..6 {
                let mut pred = 0.0;
                for c in 0..7 {
                    pred += y[(s, c)] * a[j][c];
                }
                // residual with channel i's own contribution added back
                let r = w[s][j] - pred + y[(s, i)] * a_col[j];
                dot += r * a_col[j];
            }
            t[s] = dot / denom;
        }
        // linearize t ≈ (d₁(x²−x₀²) + d₂(x−x₀)) − t(d₄x² + d₅x)
        let mut m = DMatrix::zeros(n, 4);
        for s in 0..n {
            let xi = x[s][i];
            m[(s, 0)] = xi * xi - x0[i] * x0[i];
            m[(s, 1)] = xi - x0[i];
            m[(s, 2)] = -t[s] * xi * xi;
            m[(s, 3)] = -t[s] * xi;
        }
        let sol = m
            .svd(true, true)
            .solve(&DVector::from_column_slice(&t), 1e-12)
            .map_err(|e| Error::Model(format!("channel seed solve failed: {e}")))?;
        // only adopt a seed whose denominator stays safely positive over the
        // training data
        let den_min = x
            .iter()
            .map(|xs| sol[2] * xs[i] * xs[i] + sol[3] * xs[i] + 1.0)
            .fold(f64::INFINITY, f64::min);
        if den_min > 1e-3 {
            thetas[i] = [sol[0], sol[1], sol[2], sol[3]];
        }
    }
    y = feature_matrix(&x, &thetas, &x0)?;
    a = solve_matrix(&y, &w)?;

    // --- joint refinement --------------------------------------------------
    let problem = JointProblem { x: &x, w: &w, x0, wgt };
    let lm_opts = LmOptions { max_iters: opts.max_iters, ..LmOptions::default() };
    let outcome = levenberg_marquardt(&problem, pack(&thetas, &a), &lm_opts)?;
    let (thetas, a) = unpack(&outcome.params);

    let mut channel_coeffs = [[0.0; 5]; 6];
    for i in 0..6 {
        let [d1, d2, d4, d5] = thetas[i];
        channel_coeffs[i] = [d1, d2, -(d1 * x0[i] * x0[i] + d2 * x0[i]), d4, d5];
    }
    let cal = Calibration {
        version: FORMAT_VERSION,
        geometry_hash: opts.geometry_hash.clone(),
        raw_scale: RawScale { offset, scale },
        channel_coeffs,
        matrix_a: a,
        raw_domain,
    };

    // training-set report
    let mut resid = DVector::zeros(6 * n);
    problem.residuals(&outcome.params, &mut resid)?;
    let weighted_rmse = (resid.iter().map(|r| r * r).sum::<f64>() / (6 * n) as f64).sqrt();
    let mut per_axis_rmse = [0.0; 6];
    for j in 0..6 {
        let ss: f64 = (0..n).map(|s| {
            let r = resid[6 * s + j] / wgt[j];
            r * r
        })
        .sum();
        per_axis_rmse[j] = (ss / n as f64).sqrt();
    }

    Ok((
        cal,
        CalReport {
            n_samples: n,
            unloaded_prefix: n0,
            iterations: outcome.iterations,
            converged: outcome.converged,
            weighted_rmse,
            per_axis_rmse,
            excitation_fractions: excitation,
        },
    ))
}

/// Convenience wrapper over [`calibrate`] for a synthesized dataset, using
/// its embedded reference wrenches and auto-detected unloaded prefix.
pub fn calibrate_dataset(ds: &Dataset, opts: &CalibrationOptions) -> Result<(Calibration, CalReport)> {
    let counts: Vec<[u32; 6]> = ds.rows.iter().map(|r| r.channels).collect();
    let wrenches: Vec<Wrench> = ds.rows.iter().map(|r| r.wrench).collect();
    calibrate(&counts, &wrenches, None, opts)
}

/// Decodes one raw sample into a wrench.
pub fn decode_one(cal: &Calibration, counts: &[u32; 6]) -> Result<DecodedSample> {
    let mut y = [0.0; 7];
    y[6] = 1.0;
    let mut extrapolated = false;
    for i in 0..6 {
        let c = counts[i] as f64;
        if c < cal.raw_domain[i][0] || c > cal.raw_domain[i][1] {
            extrapolated = true;
        }
        let xi = (c - cal.raw_scale.offset[i]) * cal.raw_scale.scale[i];
        let d = cal.channel_coeffs[i];
        let den = d[3] * xi * xi + d[4] * xi + 1.0;
        if den.abs() < POLE_EPS {
            return Err(Error::Pole(xi));
        }
        y[i] = (d[0] * xi * xi + d[1] * xi + d[2]) / den;
    }
    let mut wv = [0.0; 6];
    for j in 0..6 {
        for c in 0..7 {
            wv[j] += cal.matrix_a[j][c] * y[c];
        }
    }
    Ok(DecodedSample {
        wrench: Wrench { fx: wv[0], fy: wv[1], fz: wv[2], tx: wv[3], ty: wv[4], tz: wv[5] },
        extrapolated,
    })
}

/// Decodes a batch of raw samples.
pub fn decode(cal: &Calibration, counts: &[[u32; 6]]) -> Result<Vec<DecodedSample>> {
    counts.iter().map(|c| decode_one(cal, c)).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct FileHeader {
    version: u32,
    geometry_hash: String,
    payload_len: usize,
    payload_sha256: String,
}

/// Writes the two-line calibration file: a JSON header carrying the format
/// version and payload checksum, then the calibration payload as JSON.
pub fn save_calibration<W: std::io::Write>(cal: &Calibration, mut out: W) -> Result<()> {
    let payload = serde_json::to_string(cal)?;
    let header = serde_json::to_string(&FileHeader {
        version: FORMAT_VERSION,
        geometry_hash: cal.geometry_hash.clone(),
        payload_len: payload.len(),
        payload_sha256: sha256_hex(payload.as_bytes()),
    })?;
    out.write_all(header.as_bytes())?;
    out.write_all(b"\n")?;
    out.write_all(payload.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads and verifies a calibration file. Corruption anywhere (unparseable
/// header, truncated payload, checksum mismatch) fails with
/// [`Error::Checksum`]; a format-version change or — when
/// `expected_geometry` is given — a geometry-hash mismatch fails with
/// [`Error::VersionMismatch`].
pub fn load_calibration<R: std::io::Read>(
    mut input: R,
    expected_geometry: Option<&str>,
) -> Result<Calibration> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (header_line, rest) = text
        .split_once('\n')
        .ok_or_else(|| Error::Checksum("missing payload line".into()))?;
    let header: FileHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Checksum(format!("unparseable header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(format!(
            "calibration format version {} (expected {FORMAT_VERSION})",
            header.version
        )));
    }
    let payload = rest.strip_suffix('\n').unwrap_or(rest);
    if payload.len() != header.payload_len {
        return Err(Error::Checksum(format!(
            "payload length {} does not match header {}",
            payload.len(),
            header.payload_len
        )));
    }
    let digest = sha256_hex(payload.as_bytes());
    if digest != header.payload_sha256 {
        return Err(Error::Checksum("payload sha256 mismatch".into()));
    }
    let cal: Calibration = serde_json::from_str(payload)?;
    if let Some(expected) = expected_geometry {
        if cal.geometry_hash != expected {
            return Err(Error::VersionMismatch(format!(
                "geometry hash {} does not match expected {expected}",
                cal.geometry_hash
            )));
        }
    }
    Ok(cal)
}
