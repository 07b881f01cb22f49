//! Scenario files: flat TOML with dotted section keys, e.g.
//!
//! ```toml
//! array.c_line_pf = 1.0
//! device.tau_w_ns = 200
//! variation.c2c_sigma = 0.042
//! run.path = "native"
//! ```
//!
//! Every key is optional; missing keys take the simulator defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::crossbar::{matched_capacitance, ArrayConfig};
use crate::device::{calibrate_amp, DeviceParams};
use crate::error::{invalid, Error, Result};
use crate::recording::{default_slope, CapturePath, QuantizerKind, QuantizerSpec, RoundTripSpec};
use crate::variability::VariationSpec;

const F_PER_PF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Native,
    Digital,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::Native => "native",
            PathKind::Digital => "digital",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub array: ArraySection,
    pub device: DeviceSection,
    pub variation: VariationSection,
    pub quantizer: QuantizerSection,
    pub run: RunSection,
    pub calibrate: CalibrateSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    /// Defaults to the input wavefront's channel count.
    pub rows: Option<usize>,
    pub cols: usize,
    pub c_line_pf: f64,
    pub v_read: f64,
    pub v_dd: f64,
    pub theta: f64,
    pub t_shifter_ns: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        let d = ArrayConfig::<f64>::default();
        ArraySection {
            rows: None,
            cols: d.cols,
            c_line_pf: d.c_line / F_PER_PF,
            v_read: d.v_read,
            v_dd: d.v_dd,
            theta: d.theta,
            t_shifter_ns: d.t_shifter,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSection {
    pub r_on_ohm: f64,
    pub r_off_max_ohm: f64,
    /// Overrides the amplitude calibrated from the window when set.
    pub amp_a_ohm: Option<f64>,
    pub tau_w_ns: f64,
    pub v_prog_threshold: f64,
    pub v_zero: f64,
    pub v_write_nominal: f64,
    pub r_window_ohm: f64,
    pub t_window_ns: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        let d = DeviceParams::<f64>::default();
        DeviceSection {
            r_on_ohm: d.r_on,
            r_off_max_ohm: d.r_off_max,
            amp_a_ohm: None,
            tau_w_ns: d.tau_w,
            v_prog_threshold: d.v_prog_threshold,
            v_zero: d.v_zero,
            v_write_nominal: d.v_write_nominal,
            r_window_ohm: d.r_window,
            t_window_ns: d.t_window,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationSection {
    pub d2d_sigma: f64,
    pub c2c_sigma: f64,
    pub seed: u64,
}

impl Default for VariationSection {
    fn default() -> Self {
        let d = VariationSpec::default();
        VariationSection {
            d2d_sigma: d.d2d_sigma,
            c2c_sigma: d.c2c_sigma,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerSection {
    pub kind: QuantizerKind,
    pub t_clk_ns: f64,
    pub t_fine_ns: f64,
}

impl Default for QuantizerSection {
    fn default() -> Self {
        QuantizerSection {
            kind: QuantizerKind::Counter,
            t_clk_ns: 1.0,
            t_fine_ns: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub path: PathKind,
    pub column: usize,
    /// Explicit recall capacitance; otherwise the window-matched value is used
    /// when `match_scale` is set, and `c_line` when it is not.
    pub scale_c_pf: Option<f64>,
    pub match_scale: bool,
    pub v_write: Option<f64>,
    pub tol: f64,
    pub slope_ohm_per_count: Option<f64>,
    pub trials: usize,
    /// Wavefront file, relative to the scenario file.
    pub input: Option<PathBuf>,
    /// Generated wavefront when no input file is given.
    pub channels: Option<usize>,
    pub span_ns: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            path: PathKind::Native,
            column: 0,
            scale_c_pf: None,
            match_scale: true,
            v_write: None,
            tol: 0.001,
            slope_ohm_per_count: None,
            trials: 1000,
            input: None,
            channels: None,
            span_ns: 40.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    pub target_span_ns: f64,
    pub target_energy_fj: f64,
    /// Defaults to `device.r_window_ohm`.
    pub r_span_ohm: Option<f64>,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        CalibrateSection {
            target_span_ns: 40.0,
            target_energy_fj: 600.0,
            r_span_ohm: None,
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            msg: e.to_string().trim_end().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text, &path.display().to_string())?, base))
    }

    pub fn device(&self) -> Result<DeviceParams<f64>> {
        let d = &self.device;
        let raw = DeviceParams {
            r_on: d.r_on_ohm,
            r_off_max: d.r_off_max_ohm,
            amp_a: 1.0,
            tau_w: d.tau_w_ns,
            v_prog_threshold: d.v_prog_threshold,
            v_zero: d.v_zero,
            v_write_nominal: d.v_write_nominal,
            r_window: d.r_window_ohm,
            t_window: d.t_window_ns,
        };
        let params = match d.amp_a_ohm {
            Some(a) => DeviceParams { amp_a: a, ..raw },
            None => calibrate_amp(raw.r_window, raw.t_window, &raw)?,
        };
        params.validate()?;
        Ok(params)
    }

    /// Array config with `rows` taken from the file or, failing that, `default_rows`.
    pub fn array(&self, default_rows: usize) -> Result<ArrayConfig<f64>> {
        let a = &self.array;
        let cfg = ArrayConfig {
            rows: a.rows.unwrap_or(default_rows),
            cols: a.cols,
            c_line: a.c_line_pf * F_PER_PF,
            v_read: a.v_read,
            v_dd: a.v_dd,
            theta: a.theta,
            t_shifter: a.t_shifter_ns,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn variation(&self, seed_override: Option<u64>) -> Result<VariationSpec> {
        let v = VariationSpec {
            d2d_sigma: self.variation.d2d_sigma,
            c2c_sigma: self.variation.c2c_sigma,
            seed: seed_override.unwrap_or(self.variation.seed),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn quantizer(&self) -> Result<QuantizerSpec<f64>> {
        let q = &self.quantizer;
        let spec = match q.kind {
            QuantizerKind::Counter => QuantizerSpec::counter(q.t_clk_ns),
            QuantizerKind::Vernier => QuantizerSpec::vernier(q.t_clk_ns, q.t_fine_ns),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn round_trip(
        &self,
        path: PathKind,
        cfg: &ArrayConfig<f64>,
        params: &DeviceParams<f64>,
    ) -> Result<RoundTripSpec<f64>> {
        let r = &self.run;
        let capture = match path {
            PathKind::Native => CapturePath::Native,
            PathKind::Digital => {
                let quantizer = self.quantizer()?;
                let slope = r
                    .slope_ohm_per_count
                    .unwrap_or_else(|| default_slope(params, quantizer.t_clk));
                if !(r.tol > 0.0 && r.tol < 1.0) {
                    return Err(invalid("run: 0 < tol < 1"));
                }
                CapturePath::Digital {
                    quantizer,
                    slope,
                    tol: r.tol,
                }
            }
        };
        let scale_cap = match (r.scale_c_pf, r.match_scale) {
            (Some(pf), _) => {
                if !(pf > 0.0) {
                    return Err(invalid("run: scale_c_pf > 0"));
                }
                Some(pf * F_PER_PF)
            }
            (None, true) => Some(matched_capacitance(cfg, params)),
            (None, false) => None,
        };
        Ok(RoundTripSpec {
            col: r.column,
            v_write: r.v_write.unwrap_or(params.v_write_nominal),
            path: capture,
            scale_cap,
        })
    }
}
