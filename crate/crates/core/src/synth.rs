//! Digital-twin synthesis: wrench → plate pose → per-coil gaps → inductances
//! → converter counts, plus excitation schedules and dataset generation.
//!
//! Geometry stays in millimetres like the coil module; the compliance map
//! works in SI (newtons, newton-metres, metres, radians) and converts at the
//! gap boundary.

use nalgebra::{Matrix6, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coil::{
    count_scale, inductance_with_target, total_inductance, CoilGeometry, CountScale,
    TargetCoupling, DEFAULT_FULL_SCALE_COUNTS, MAX_COUNTS,
};
use crate::error::{Error, Result};

/// Operating range of each wrench axis: ±Fx, ±Fy (N), ±Fz (N), ±Tx, ±Ty,
/// ±Tz (N·m).
pub const AXIS_LIMITS: [f64; 6] = [890.0, 890.0, 1435.0, 27.0, 27.0, 45.0];

/// Column labels used in CSV output, wrench axes first.
pub const AXIS_NAMES: [&str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];

/// Highest sample rate the 34-byte wire frame sustains on the reference
/// 1 Mbit/s link (Hz).
pub const MAX_RATE_HZ: f64 = 4080.0;

/// A six-axis load: three forces (N) and three torques (N·m).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl Wrench {
    pub fn zero() -> Self {
        Wrench::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Wrench { fx: v[0], fy: v[1], fz: v[2], tx: v[3], ty: v[4], tz: v[5] }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.fx, self.fy, self.fz, self.tx, self.ty, self.tz)
    }

    /// Single-axis wrench: `value` on axis `axis` (0..6, force axes first).
    pub fn single_axis(axis: usize, value: f64) -> Self {
        let mut v = Vector6::zeros();
        v[axis] = value;
        Wrench::from_vector(&v)
    }

    pub fn is_zero(&self) -> bool {
        self.to_vector().iter().all(|&c| c == 0.0)
    }
}

/// One sensing coil mounted on the stator, facing the moving target plate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoilSite {
    /// Coil centre in the plate frame (mm).
    pub position: Vector3<f64>,
    /// Unit normal along which the local gap is measured; plate motion with a
    /// positive component along this axis closes the gap.
    pub axis: Vector3<f64>,
}

/// Rigid-plate suspension model: a linear compliance mapping wrench to the
/// plate twist, and six coil sites whose local gaps respond to that twist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateKinematics {
    pub sites: Vec<CoilSite>,
    /// 6×6 symmetric positive-definite compliance (SI: m/N, rad/(N·m), …).
    pub compliance: Matrix6<f64>,
    /// Unloaded coil-to-plate gap at every site (mm).
    pub nominal_gap: f64,
}

/// Radius of the circle the coil sites sit on (mm).
pub const SITE_RADIUS_MM: f64 = 25.0;

/// Unloaded gap (mm).
pub const NOMINAL_GAP_MM: f64 = 1.0;

impl PlateKinematics {
    /// Reference suspension: three vertical-sensing coils at 90°, 210°, 330°
    /// measuring along +z and three horizontal-sensing coils at 30°, 150°,
    /// 270° measuring tangentially, on a 25 mm radius with a 1 mm unloaded
    /// gap. The diagonal compliance is scaled so a full-scale load on any
    /// single axis moves its coils by 10 % of the nominal gap.
    pub fn default_decoupled() -> Self {
        let mut sites = Vec::with_capacity(6);
        for deg in [90.0, 210.0, 330.0] {
            let phi = f64::to_radians(deg);
            sites.push(CoilSite {
                position: Vector3::new(
                    SITE_RADIUS_MM * phi.cos(),
                    SITE_RADIUS_MM * phi.sin(),
                    0.0,
                ),
                axis: Vector3::new(0.0, 0.0, 1.0),
            });
        }
        for deg in [30.0, 150.0, 270.0] {
            let phi = f64::to_radians(deg);
            sites.push(CoilSite {
                position: Vector3::new(
                    SITE_RADIUS_MM * phi.cos(),
                    SITE_RADIUS_MM * phi.sin(),
                    0.0,
                ),
                axis: Vector3::new(-phi.sin(), phi.cos(), 0.0),
            });
        }

        // 10 % of the nominal gap at the axis limit; rotations act through
        // the site radius lever arm.
        let dg = 0.1 * NOMINAL_GAP_MM * 1e-3; // m
        let lever = SITE_RADIUS_MM * 1e-3; // m
        let mut c = Matrix6::zeros();
        c[(0, 0)] = dg / AXIS_LIMITS[0];
        c[(1, 1)] = dg / AXIS_LIMITS[1];
        c[(2, 2)] = dg / AXIS_LIMITS[2];
        c[(3, 3)] = dg / lever / AXIS_LIMITS[3];
        c[(4, 4)] = dg / lever / AXIS_LIMITS[4];
        c[(5, 5)] = dg / lever / AXIS_LIMITS[5];

        PlateKinematics { sites, compliance: c, nominal_gap: NOMINAL_GAP_MM }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.len() != 6 {
            return Err(Error::Domain(format!(
                "expected 6 coil sites, got {}",
                self.sites.len()
            )));
        }
        for (i, s) in self.sites.iter().enumerate() {
            if (s.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "site {i} axis must be unit length, |axis| = {}",
                    s.axis.norm()
                )));
            }
        }
        if !(self.nominal_gap > 0.0) {
            return Err(Error::Domain(format!(
                "nominal_gap must be > 0, got {}",
                self.nominal_gap
            )));
        }
        let asym = (self.compliance - self.compliance.transpose()).norm();
        if asym > 1e-12 * self.compliance.norm().max(1.0) {
            return Err(Error::Domain(format!(
                "compliance must be symmetric (asymmetry norm {asym:.3e})"
            )));
        }
        if self.compliance.cholesky().is_none() {
            return Err(Error::Domain(
                "compliance must be positive definite".into(),
            ));
        }
        Ok(())
    }

    /// Plate twist [δ (m); θ (rad)] under `w`.
    pub fn twist(&self, w: &Wrench) -> Vector6<f64> {
        self.compliance * w.to_vector()
    }
}

/// Local coil gaps (mm) under the wrench. Errors with the offending site
/// index if the plate would touch a coil (gap ≤ 0).
pub fn gaps_from_wrench(k: &PlateKinematics, w: &Wrench) -> Result<[f64; 6]> {
    let t = k.twist(w);
    let delta = Vector3::new(t[0], t[1], t[2]);
    let theta = Vector3::new(t[3], t[4], t[5]);
    let mut gaps = [0.0; 6];
    for (i, site) in k.sites.iter().enumerate() {
        let p_m = site.position * 1e-3;
        let u = delta + theta.cross(&p_m); // m
        let gap = k.nominal_gap - u.dot(&site.axis) * 1e3;
        if gap <= 0.0 {
            return Err(Error::PlateContact { site: i, gap });
        }
        gaps[i] = gap;
    }
    Ok(gaps)
}

/// One sensing channel: coil geometry, plate coupling strength, and the
/// converter count anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub geometry: CoilGeometry,
    /// Image coupling strength β for this channel's target plate.
    pub coupling_scale: f64,
    pub count_scale: CountScale,
}

/// Complete forward model of the six-channel sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub kinematics: PlateKinematics,
    pub channels: Vec<ChannelModel>,
}

/// Default image coupling strength.
pub const DEFAULT_COUPLING_SCALE: f64 = 0.3;

impl SensorModel {
    /// Reference twin: the decoupled suspension with vertical coils on
    /// channels 0–2 and horizontal coils on channels 3–5, β = 0.3, and each
    /// converter anchored so the coil's free-space inductance reads
    /// 2²⁷ counts.
    pub fn reference() -> Result<Self> {
        let kinematics = PlateKinematics::default_decoupled();
        let mut channels = Vec::with_capacity(6);
        for i in 0..6 {
            let geometry = if i < 3 {
                CoilGeometry::vertical_preset()
            } else {
                CoilGeometry::horizontal_preset()
            };
            let anchor = total_inductance(&geometry)?;
            channels.push(ChannelModel {
                geometry,
                coupling_scale: DEFAULT_COUPLING_SCALE,
                count_scale: count_scale(anchor, DEFAULT_FULL_SCALE_COUNTS)?,
            });
        }
        Ok(SensorModel { kinematics, channels })
    }

    pub fn validate(&self) -> Result<()> {
        self.kinematics.validate()?;
        if self.channels.len() != 6 {
            return Err(Error::Domain(format!(
                "expected 6 channels, got {}",
                self.channels.len()
            )));
        }
        for ch in &self.channels {
            ch.geometry.validate()?;
            if !(0.0..=1.0).contains(&ch.coupling_scale) {
                return Err(Error::Domain(format!(
                    "coupling_scale must be in [0, 1], got {}",
                    ch.coupling_scale
                )));
            }
        }
        Ok(())
    }
}

/// Ideal (un-quantized) converter counts for the wrench.
pub fn counts_from_wrench(model: &SensorModel, w: &Wrench) -> Result<[f64; 6]> {
    let gaps = gaps_from_wrench(&model.kinematics, w)?;
    let mut counts = [0.0; 6];
    for (i, ch) in model.channels.iter().enumerate() {
        let l = inductance_with_target(
            &ch.geometry,
            &TargetCoupling { gap: gaps[i], coupling_scale: ch.coupling_scale },
        )?;
        counts[i] = ch.count_scale.kappa * l.sqrt();
    }
    Ok(counts)
}

/// Additive converter noise: white Gaussian counts plus a linear-in-time
/// drift applied identically to every channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of the per-sample count noise.
    pub count_sigma: f64,
    /// Drift slope (counts per second).
    pub drift_per_second: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::default()
    }
}

/// One synthesized sample: timestamp, commanded wrench, quantized counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub t_us: u64,
    pub wrench: Wrench,
    pub channels: [u32; 6],
}

/// A synthesized acquisition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Sample rate (Hz).
    pub rate: f64,
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    /// Writes the canonical CSV form:
    /// `t_us,fx,fy,fz,tx,ty,tz,ch0,ch1,ch2,ch3,ch4,ch5`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_us".to_string()];
        header.extend(AXIS_NAMES.iter().map(|s| s.to_string()));
        header.extend((0..6).map(|i| format!("ch{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.t_us.to_string()];
            let wv = row.wrench.to_vector();
            rec.extend(wv.iter().map(|v| v.to_string()));
            rec.extend(row.channels.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }
}

/// One standard normal draw by the Box–Muller transform. Uses exactly two
/// uniform draws so the consumption pattern is reproducible.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>(); // in (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Runs the forward model over `schedule` at `rate` Hz, applies the noise
/// model, and quantizes to counts. Noise draws are keyed to `seed` and
/// consumed row-major (sample by sample, channel 0..5 within a sample), and
/// the generator is untouched when `count_sigma` is zero, so outputs are
/// bit-reproducible.
pub fn generate_dataset(
    schedule: &[Wrench],
    model: &SensorModel,
    noise: &NoiseModel,
    rate: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(rate > 0.0) || rate > MAX_RATE_HZ {
        return Err(Error::Rate(rate));
    }
    model.validate()?;
    if !(noise.count_sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "count_sigma must be >= 0, got {}",
            noise.count_sigma
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(schedule.len());
    for (i, w) in schedule.iter().enumerate() {
        let ideal = counts_from_wrench(model, w)?;
        let drift = noise.drift_per_second * (i as f64 / rate);
        let mut channels = [0u32; 6];
        for (c, &value) in ideal.iter().enumerate() {
            let mut v = value + drift;
            if noise.count_sigma > 0.0 {
                v += noise.count_sigma * standard_normal(&mut rng);
            }
            let rounded = v.round();
            channels[c] = if rounded < 0.0 {
                0
            } else if rounded > MAX_COUNTS as f64 {
                MAX_COUNTS
            } else {
                rounded as u32
            };
        }
        rows.push(DatasetRow {
            t_us: (i as f64 * 1e6 / rate).round() as u64,
            wrench: *w,
            channels,
        });
    }
    Ok(Dataset { rate, rows })
}

fn linspace_exclusive(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + i as f64 * (b - a) / n as f64).collect()
}

fn linspace_inclusive(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let mut out: Vec<f64> =
        (0..n).map(|i| a + i as f64 * (b - a) / (n - 1) as f64).collect();
    // pin the endpoint exactly despite rounding in the step arithmetic
    out[n - 1] = b;
    out
}

/// Symmetric triangle profile of `n` samples: 0 → peak over the first
/// quarter, peak → −peak over the middle half, −peak → 0 over the remainder
/// (final endpoint included).
pub fn triangle(n: usize, peak: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let q = n / 4;
    let mut out = linspace_exclusive(0.0, peak, q);
    out.extend(linspace_exclusive(peak, -peak, 2 * q));
    out.extend(linspace_inclusive(-peak, 0.0, n - 3 * q));
    out
}

/// Standard calibration excitation: an unloaded hold followed by one
/// triangle sweep per axis at `peak_fraction` of the axis limit.
pub fn calibration_schedule(
    rate: f64,
    unloaded_seconds: f64,
    per_axis_seconds: f64,
    peak_fraction: f64,
) -> Vec<Wrench> {
    let n0 = (unloaded_seconds * rate).round() as usize;
    let n = (per_axis_seconds * rate).round() as usize;
    let mut schedule = vec![Wrench::zero(); n0];
    for axis in 0..6 {
        for v in triangle(n, peak_fraction * AXIS_LIMITS[axis]) {
            schedule.push(Wrench::single_axis(axis, v));
        }
    }
    schedule
}

/// A wrench waypoint for piecewise-linear schedules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    /// Time of the waypoint (s).
    pub t_s: f64,
    pub wrench: Wrench,
}

/// Samples a piecewise-linear interpolation of the keyframes at `rate` Hz
/// from t = 0 through the final keyframe. Keyframe times must be strictly
/// increasing and non-negative.
pub fn schedule_from_keyframes(keys: &[Keyframe], rate: f64) -> Result<Vec<Wrench>> {
    if keys.is_empty() {
        return Err(Error::Domain("schedule needs at least one keyframe".into()));
    }
    if !(rate > 0.0) || rate > MAX_RATE_HZ {
        return Err(Error::Rate(rate));
    }
    if keys[0].t_s < 0.0 {
        return Err(Error::Domain("keyframe times must be non-negative".into()));
    }
    for pair in keys.windows(2) {
        if pair[1].t_s <= pair[0].t_s {
            return Err(Error::Domain(
                "keyframe times must be strictly increasing".into(),
            ));
        }
    }
    let t_end = keys[keys.len() - 1].t_s;
    let n = (t_end * rate).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let t = i as f64 / rate;
        while seg + 1 < keys.len() && keys[seg + 1].t_s < t {
            seg += 1;
        }
        let w = if t <= keys[0].t_s {
            keys[0].wrench
        } else if seg + 1 >= keys.len() {
            keys[keys.len() - 1].wrench
        } else {
            let (k0, k1) = (&keys[seg], &keys[seg + 1]);
            let f = (t - k0.t_s) / (k1.t_s - k0.t_s);
            Wrench::from_vector(&(k0.wrench.to_vector() * (1.0 - f) + k1.wrench.to_vector() * f))
        };
        out.push(w);
    }
    Ok(out)
}
