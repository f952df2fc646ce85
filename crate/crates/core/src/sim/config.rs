use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::ofdm::FrameSpec;
use crate::protocol::{LossProfile, ProtocolConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    /// Genie timing, CFO and channel.
    #[default]
    Perfect,
    /// Frame detection, CFO and channel estimated from the received frame.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Fixed,
    #[default]
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Impairments {
    /// Common CFO per AP, uniform in ±`cfo_max_hz`.
    pub cfo: bool,
    pub cfo_max_hz: f64,
    /// Integer UE2 delay per AP, uniform in ±`delay_max` samples.
    pub delay: bool,
    pub delay_max: u32,
    /// Fractional delay uniform in [0, 0.5] samples on every link.
    pub sco: bool,
}

impl Default for Impairments {
    fn default() -> Self {
        Self {
            cfo: false,
            cfo_max_hz: 3700.0,
            delay: false,
            delay_max: 8,
            sco: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    pub sample_rate: f64,
    pub fft_len: usize,
    pub cp_len: usize,
    pub used_subcarriers: usize,
    pub data_symbols: usize,
    pub pn_len: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        let s = FrameSpec::default();
        Self {
            sample_rate: s.sample_rate,
            fft_len: s.fft_len,
            cp_len: s.cp_len,
            used_subcarriers: s.used_subcarriers,
            data_symbols: s.data_symbols,
            pn_len: s.pn_len,
        }
    }
}

impl SystemParams {
    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec {
            fft_len: self.fft_len,
            cp_len: self.cp_len,
            used_subcarriers: self.used_subcarriers,
            sample_rate: self.sample_rate,
            data_symbols: self.data_symbols,
            pn_len: self.pn_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub ebno_db: Vec<f64>,
    /// Fixed number of trials (frames) per point.
    pub trials: Option<u64>,
    /// Stop a point once this many symbol errors are seen.
    pub error_events: Option<u64>,
    /// Trial cap when stopping on error events.
    pub max_trials: u64,
    pub csi: CsiMode,
    pub channel: ChannelKind,
    /// Fixed-mode gains `(h_j1, h_j2)` at AP1 and AP2, as `[re, im]` pairs.
    pub h1: [[f64; 2]; 2],
    pub h2: [[f64; 2]; 2],
    pub impairments: Impairments,
    pub loss: f64,
    pub replication: usize,
    pub timeout_s: f64,
    /// Data symbols whose pilots feed the channel estimate.
    pub pilot_symbols: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub system: SystemParams,
}

pub const DEFAULT_ERROR_EVENTS: u64 = 200;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ebno_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            trials: None,
            error_events: None,
            max_trials: 5000,
            csi: CsiMode::Perfect,
            channel: ChannelKind::Rayleigh,
            h1: [[1.0, 0.0], [0.5, 0.5]],
            h2: [[0.8, -0.2], [-0.3, 0.9]],
            impairments: Impairments::default(),
            loss: 0.0,
            replication: 4,
            timeout_s: 1.0,
            pilot_symbols: 1,
            seed: 1,
            out: None,
            system: SystemParams::default(),
        }
    }
}

/// How many trials a point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    Trials(u64),
    ErrorEvents { target: u64, max_trials: u64 },
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SimError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.ebno_db.is_empty() {
            return bad("ebno_db: sweep is empty".into());
        }
        if let Some(x) = self.ebno_db.iter().find(|x| !x.is_finite()) {
            return bad(format!("ebno_db: {x} is not finite"));
        }
        if self.trials.is_some() && self.error_events.is_some() {
            return bad("trials and error_events are mutually exclusive".into());
        }
        if self.trials == Some(0) {
            return bad("trials: must be at least 1".into());
        }
        if self.error_events == Some(0) {
            return bad("error_events: must be at least 1".into());
        }
        if self.max_trials == 0 {
            return bad("max_trials: must be at least 1".into());
        }
        for (name, h) in [("h1", self.h1), ("h2", self.h2)] {
            if h.iter().flatten().any(|v| !v.is_finite()) {
                return bad(format!("{name}: gains must be finite"));
            }
        }
        let im = &self.impairments;
        if !(im.cfo_max_hz >= 0.0) {
            return bad("impairments.cfo_max_hz: must be nonnegative".into());
        }
        let spec = self.system.frame_spec();
        spec.validate()
            .map_err(|e| SimError::Config(format!("system: {e}")))?;
        if im.cfo && im.cfo_max_hz >= spec.cfo_range() {
            return bad(format!(
                "impairments.cfo_max_hz: {} exceeds the ±{} Hz estimator range",
                im.cfo_max_hz,
                spec.cfo_range()
            ));
        }
        // integer delay plus up to half a sample of fractional delay
        if im.delay && im.delay_max as usize >= spec.cp_len {
            return bad(format!(
                "impairments.delay_max: must be below cp_len = {}",
                spec.cp_len
            ));
        }
        if self.pilot_symbols == 0 || self.pilot_symbols > spec.data_symbols {
            return bad(format!(
                "pilot_symbols: must be in 1..={}",
                spec.data_symbols
            ));
        }
        self.protocol().validate().map_err(SimError::Config)?;
        if self.loss >= 1.0 {
            return bad("loss: must be below 1".into());
        }
        Ok(())
    }

    pub fn stop_rule(&self) -> StopRule {
        match self.trials {
            Some(n) => StopRule::Trials(n),
            None => StopRule::ErrorEvents {
                target: self.error_events.unwrap_or(DEFAULT_ERROR_EVENTS),
                max_trials: self.max_trials,
            },
        }
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            timeout_s: self.timeout_s,
            replication: self.replication,
            loss: LossProfile::uniform(self.loss),
            sample_rate: self.system.sample_rate,
            ..ProtocolConfig::default()
        }
    }

    pub fn fixed_gains(&self) -> [[Complex64; 2]; 2] {
        let c = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        [
            [c(self.h1[0]), c(self.h1[1])],
            [c(self.h2[0]), c(self.h2[1])],
        ]
    }
}

/// `"0:5:25"` (start:step:stop, inclusive) or `"0,5,10"`.
pub fn parse_ebno_list(s: &str) -> Result<Vec<f64>, SimError> {
    let bad = || SimError::Config(format!("ebno: cannot parse '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, step, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + step * i as f64).collect());
    }
    let v: Vec<f64> = s.split(',').map(num).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(bad());
    }
    Ok(v)
}

/// Parses `a+bi` / `a-bi` / `a` / `bi`.
pub fn parse_complex(s: &str) -> Result<Complex64, SimError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || SimError::Config(format!("cannot parse complex number '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not an exponent sign or the leading one
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    let im = im.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// `"1+0i,0.5+0.5i"`.
pub fn parse_complex_pair(s: &str) -> Result<[Complex64; 2], SimError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(SimError::Config(format!(
            "expected two comma-separated gains, got '{s}'"
        )));
    }
    Ok([parse_complex(parts[0])?, parse_complex(parts[1])?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = SimConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        let spec = cfg.system.frame_spec();
        assert_eq!(spec.sample_rate, 1e6);
        assert_eq!(spec.subcarrier_spacing(), 15625.0);
        assert_eq!(spec.frame_len(), 880);
        assert_eq!(spec.used_subcarriers, 48);
        cfg.validate().unwrap();
        assert_eq!(
            cfg.stop_rule(),
            StopRule::ErrorEvents {
                target: 200,
                max_trials: 5000
            }
        );
    }

    #[test]
    fn unknown_and_malformed_keys_name_the_key() {
        let e = SimConfig::from_toml_str("ebnodb = [1.0]")
            .unwrap_err()
            .to_string();
        assert!(e.contains("ebnodb"), "{e}");
        let e = SimConfig::from_toml_str("trials = \"many\"")
            .unwrap_err()
            .to_string();
        assert!(e.contains("trials"), "{e}");
        let e = SimConfig::from_toml_str("[impairments]\ncfo_mx = 3")
            .unwrap_err()
            .to_string();
        assert!(e.contains("cfo_mx"), "{e}");
    }

    #[test]
    fn trials_and_error_events_conflict() {
        let cfg = SimConfig::from_toml_str("trials = 10\nerror_events = 5").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = SimConfig {
            trials: Some(7),
            csi: CsiMode::Estimated,
            ..SimConfig::default()
        };
        cfg.impairments.cfo = true;
        let back = SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn ebno_ranges() {
        assert_eq!(
            parse_ebno_list("0:5:25").unwrap(),
            vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
        );
        assert_eq!(parse_ebno_list("10").unwrap(), vec![10.0]);
        assert_eq!(parse_ebno_list("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_ebno_list("0:0:5").is_err());
        assert!(parse_ebno_list("a").is_err());
    }

    #[test]
    fn complex_parsing() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("1+0i").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("0.5-0.5i").unwrap(), c(0.5, -0.5));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2").unwrap(), c(2.0, 0.0));
        assert_eq!(parse_complex("1e-3+2e+1j").unwrap(), c(1e-3, 20.0));
        assert_eq!(parse_complex("-0.25i").unwrap(), c(0.0, -0.25));
        assert!(parse_complex("1+xi").is_err());
        assert_eq!(
            parse_complex_pair("1+0i, 0.5+0.5i").unwrap(),
            [c(1.0, 0.0), c(0.5, 0.5)]
        );
        assert!(parse_complex_pair("1").is_err());
    }

    #[test]
    fn impairment_limits() {
        let mut cfg = SimConfig::default();
        cfg.impairments.cfo = true;
        cfg.impairments.cfo_max_hz = 40_000.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.impairments.delay = true;
        cfg.impairments.delay_max = 16;
        assert!(cfg.validate().is_err());
        cfg.impairments.delay_max = 15;
        cfg.validate().unwrap();
    }
}
