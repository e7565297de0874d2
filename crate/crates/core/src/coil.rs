//! Closed-form inductance chain for stacked planar spiral coils.
//!
//! Geometry is stored in millimetres and converted to SI at a single boundary
//! (inside [`layer_inductance`]). Mil-specified trace dimensions convert at
//! 1 mil = 0.0254 mm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 4e-7 * std::f64::consts::PI;

/// Millimetres per mil.
pub const MIL_TO_MM: f64 = 0.0254;

/// Largest representable channel value: the converter outputs 28-bit counts.
pub const MAX_COUNTS: u32 = (1 << 28) - 1;

/// Default anchor: zero-target total inductance maps to mid-scale counts,
/// leaving headroom in both directions.
pub const DEFAULT_FULL_SCALE_COUNTS: u32 = 1 << 27;

/// Physical description of one sensing coil.
///
/// All lengths in millimetres. `layer_gaps` holds the `layer_count - 1`
/// inter-layer spacings, outermost pair first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoilGeometry {
    /// Outer diameter D_out (mm).
    pub outer_diameter: f64,
    /// Turns per layer N.
    pub turns_per_layer: u32,
    /// Trace width w (mm).
    pub trace_width: f64,
    /// Trace-to-trace spacing s (mm).
    pub trace_spacing: f64,
    /// Number of stacked layers M.
    pub layer_count: u32,
    /// Inter-layer gaps (mm), exactly `layer_count - 1` entries, all positive.
    pub layer_gaps: Vec<f64>,
    /// Centre diameter of the outermost trace d_L (mm).
    pub outermost_trace_center_diameter: f64,
    /// Copper weight (oz). Informational only; resistance is out of scope.
    #[serde(default = "default_copper_weight")]
    pub copper_weight_oz: f64,
}

fn default_copper_weight() -> f64 {
    1.0
}

impl CoilGeometry {
    /// The 10 mm three-layer vertical sensing coil (18 turns per layer,
    /// 4 mil trace and spacing, 59 mil and 5.9 mil layer gaps).
    pub fn vertical_preset() -> Self {
        let s = 4.0 * MIL_TO_MM;
        CoilGeometry {
            outer_diameter: 10.0,
            turns_per_layer: 18,
            trace_width: s,
            trace_spacing: s,
            layer_count: 3,
            layer_gaps: vec![59.0 * MIL_TO_MM, 5.9 * MIL_TO_MM],
            outermost_trace_center_diameter: 10.0 - s,
            copper_weight_oz: 1.0,
        }
    }

    /// The rectangular 4.7 mm × 13 mm four-layer horizontal coil, modelled as
    /// an equal-area circle (D_out = sqrt(4 · h · w / π)) with 10 turns per
    /// layer. Only the innermost layer pair spacing (5.9 mil) is distinct; the
    /// remaining gaps reuse the vertical stack's 59 mil.
    pub fn horizontal_preset() -> Self {
        let s = 4.0 * MIL_TO_MM;
        let d_out = (4.7 * 13.0 * 4.0 / std::f64::consts::PI).sqrt();
        CoilGeometry {
            outer_diameter: d_out,
            turns_per_layer: 10,
            trace_width: s,
            trace_spacing: s,
            layer_count: 4,
            layer_gaps: vec![59.0 * MIL_TO_MM, 59.0 * MIL_TO_MM, 5.9 * MIL_TO_MM],
            outermost_trace_center_diameter: d_out - s,
            copper_weight_oz: 1.0,
        }
    }

    /// Checks the structural invariants, including a positive derived inner
    /// diameter and the ordering D_in < d_L <= D_out.
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_diameter > 0.0) {
            return Err(Error::Domain(format!(
                "outer_diameter must be > 0, got {}",
                self.outer_diameter
            )));
        }
        if !(self.trace_width > 0.0) || !(self.trace_spacing > 0.0) {
            return Err(Error::Domain(format!(
                "trace width/spacing must be > 0, got w={} s={}",
                self.trace_width, self.trace_spacing
            )));
        }
        if self.layer_count == 0 {
            return Err(Error::Domain("layer_count must be >= 1".into()));
        }
        if self.layer_gaps.len() != (self.layer_count - 1) as usize {
            return Err(Error::Domain(format!(
                "layer_gaps must have layer_count - 1 = {} entries, got {}",
                self.layer_count - 1,
                self.layer_gaps.len()
            )));
        }
        if self.layer_gaps.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Domain("layer_gaps entries must all be > 0".into()));
        }
        let d_in = inner_diameter(self)?;
        if !(d_in < self.outermost_trace_center_diameter
            && self.outermost_trace_center_diameter <= self.outer_diameter)
        {
            return Err(Error::Domain(format!(
                "need inner diameter < outermost trace centre diameter <= outer diameter, \
                 got {} < {} <= {}",
                d_in, self.outermost_trace_center_diameter, self.outer_diameter
            )));
        }
        Ok(())
    }
}

/// LC tank parameters of one sensing channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantCircuit {
    /// Tank capacitance C (F).
    pub capacitance: f64,
    /// Parasitic capacitance C_par (F).
    pub parasitic_capacitance: f64,
}

impl ResonantCircuit {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacitance > 0.0) {
            return Err(Error::Domain(format!(
                "capacitance must be > 0, got {}",
                self.capacitance
            )));
        }
        if !(self.parasitic_capacitance >= 0.0) {
            return Err(Error::Domain(format!(
                "parasitic capacitance must be >= 0, got {}",
                self.parasitic_capacitance
            )));
        }
        Ok(())
    }
}

/// A conductive target plate facing the coil.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetCoupling {
    /// Coil-to-plate distance (mm).
    pub gap: f64,
    /// Image-layer coupling strength β in [0, 1].
    pub coupling_scale: f64,
}

impl TargetCoupling {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0) {
            return Err(Error::Domain(format!("gap must be > 0, got {}", self.gap)));
        }
        if !(0.0..=1.0).contains(&self.coupling_scale) {
            return Err(Error::Domain(format!(
                "coupling_scale must be in [0, 1], got {}",
                self.coupling_scale
            )));
        }
        Ok(())
    }
}

/// Result of quantizing an inductance to converter counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawCounts {
    pub counts: u32,
    /// Set when the ideal value was clamped to the 28-bit range.
    pub saturated: bool,
}

/// Inner diameter D_in = D_out − (2N+1)s − (2N−1)w.
pub fn inner_diameter(g: &CoilGeometry) -> Result<f64> {
    let n = g.turns_per_layer as f64;
    let d_in = g.outer_diameter - (2.0 * n + 1.0) * g.trace_spacing - (2.0 * n - 1.0) * g.trace_width;
    if d_in <= 0.0 {
        return Err(Error::NonPositiveInnerDiameter(d_in));
    }
    Ok(d_in)
}

/// Average diameter with the outermost-trace correction factor:
/// (1 + (4/π)(d_L/D_out − 1)) · (D_in + D_out)/2.
pub fn average_diameter(g: &CoilGeometry) -> Result<f64> {
    let d_in = inner_diameter(g)?;
    let correction =
        1.0 + (4.0 / std::f64::consts::PI) * (g.outermost_trace_center_diameter / g.outer_diameter - 1.0);
    Ok(correction * (d_in + g.outer_diameter) / 2.0)
}

/// Fill ratio α = (D_out − D_in)/(D_out + D_in).
pub fn fill_ratio(g: &CoilGeometry) -> Result<f64> {
    let d_in = inner_diameter(g)?;
    Ok((g.outer_diameter - d_in) / (g.outer_diameter + d_in))
}

/// Single-layer inductance (H):
/// (μ₀/2) · N² · D_avg · (ln(2.46/α) + 0.2 α²), D_avg in metres.
pub fn layer_inductance(g: &CoilGeometry) -> Result<f64> {
    if g.turns_per_layer == 0 {
        // The N² factor dominates the (then-degenerate) log term.
        inner_diameter(g)?;
        return Ok(0.0);
    }
    let alpha = fill_ratio(g)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "fill ratio must be in (0, 1), got {alpha}"
        )));
    }
    let d_avg_m = average_diameter(g)? * 1e-3;
    let n = g.turns_per_layer as f64;
    Ok(MU_0 / 2.0 * n * n * d_avg_m * ((2.46 / alpha).ln() + 0.2 * alpha * alpha))
}

/// Inter-layer magnetic coupling factor
/// k(h) = 1 / (0.184 h³ − 0.525 h² + 1.038 h + 1.001)
/// for the normalized layer distance h ≥ 0 (distance divided by the average
/// diameter). Strictly decreasing on [0, ∞) with k(0) = 1/1.001.
pub fn coupling_factor(h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::Domain(format!(
            "normalized distance must be >= 0, got {h}"
        )));
    }
    Ok(1.0 / (0.184 * h * h * h - 0.525 * h * h + 1.038 * h + 1.001))
}

/// Total inductance (H) of the M-layer stack without a target:
/// (2 Σ_{i=1}^{M−1} k(gap_i / D_avg) + M) · L_layer.
pub fn total_inductance(g: &CoilGeometry) -> Result<f64> {
    g.validate()?;
    let l_layer = layer_inductance(g)?;
    let d_avg = average_diameter(g)?;
    let mut k_sum = 0.0;
    for &gap in &g.layer_gaps {
        k_sum += coupling_factor(gap / d_avg)?;
    }
    Ok((2.0 * k_sum + g.layer_count as f64) * l_layer)
}

/// Resonant frequency f = 1 / (2π √(L (C + C_par))) of the LC tank.
pub fn resonant_frequency(inductance: f64, rc: &ResonantCircuit) -> Result<f64> {
    rc.validate()?;
    if !(inductance > 0.0) {
        return Err(Error::Domain(format!(
            "inductance must be > 0, got {inductance}"
        )));
    }
    let c_total = rc.capacitance + rc.parasitic_capacitance;
    if !(c_total > 0.0) {
        return Err(Error::Domain(format!(
            "total capacitance must be > 0, got {c_total}"
        )));
    }
    Ok(1.0 / (2.0 * std::f64::consts::PI * (inductance * c_total).sqrt()))
}

/// Inductance (H) with a conductive plate at `t.gap` mm in front of the stack.
///
/// The plate is modelled as a mirror-image layer: each physical layer at
/// cumulative depth `depth_i` below the coil face sees a negative mutual
/// coupling β·k((2·gap + depth_i)/D_avg), so
/// ΔL = L_layer · 2β · Σ_i k((2·gap + depth_i)/D_avg) and the result is
/// L_total − ΔL. Strictly increasing in `gap` and bounded above by L_total.
pub fn inductance_with_target(g: &CoilGeometry, t: &TargetCoupling) -> Result<f64> {
    g.validate()?;
    t.validate()?;
    let l_total = total_inductance(g)?;
    let l_layer = layer_inductance(g)?;
    let d_avg = average_diameter(g)?;
    let mut k_sum = 0.0;
    let mut depth = 0.0;
    for i in 0..g.layer_count as usize {
        if i > 0 {
            depth += g.layer_gaps[i - 1];
        }
        k_sum += coupling_factor((2.0 * t.gap + depth) / d_avg)?;
    }
    let delta = l_layer * 2.0 * t.coupling_scale * k_sum;
    if delta >= l_total {
        return Err(Error::Model(format!(
            "target coupling removes the whole inductance (ΔL = {delta:.3e} H >= L_total = \
             {l_total:.3e} H); reduce coupling_scale"
        )));
    }
    Ok(l_total - delta)
}

/// Count scale κ (counts per √H) anchoring the converter output so that
/// `counts_at_anchor` corresponds to the inductance `l_anchor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountScale {
    pub kappa: f64,
}

/// Builds the κ anchor. The conventional anchor is the coil's zero-target
/// total inductance mapping to [`DEFAULT_FULL_SCALE_COUNTS`].
pub fn count_scale(l_anchor: f64, counts_at_anchor: u32) -> Result<CountScale> {
    if !(l_anchor > 0.0) {
        return Err(Error::Domain(format!(
            "anchor inductance must be > 0, got {l_anchor}"
        )));
    }
    if counts_at_anchor == 0 || counts_at_anchor > MAX_COUNTS {
        return Err(Error::Domain(format!(
            "anchor counts must be in 1..=2^28-1, got {counts_at_anchor}"
        )));
    }
    Ok(CountScale {
        kappa: counts_at_anchor as f64 / l_anchor.sqrt(),
    })
}

/// Converter output for inductance `l`: round(κ √L) clamped to the 28-bit
/// range, with a saturation flag when the clamp engages.
pub fn raw_counts(l: f64, scale: &CountScale) -> Result<RawCounts> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!("inductance must be > 0, got {l}")));
    }
    let ideal = scale.kappa * l.sqrt();
    if !ideal.is_finite() {
        return Err(Error::Domain(format!("non-finite count value {ideal}")));
    }
    let rounded = ideal.round();
    if rounded < 0.0 {
        Ok(RawCounts { counts: 0, saturated: true })
    } else if rounded > MAX_COUNTS as f64 {
        Ok(RawCounts { counts: MAX_COUNTS, saturated: true })
    } else {
        Ok(RawCounts { counts: rounded as u32, saturated: false })
    }
}
