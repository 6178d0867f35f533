//! Flat, human-editable run configuration: sectioned key-value text with
//! `[crystal]`, `[laser]`, repeatable `[state]`, and `[run]` tables.
//!
//! ```text
//! [crystal]
//! a = 5.32
//! b = -0.0814, -0.0024, -0.0048, -0.0003, -0.0009
//! sites = 100
//!
//! [laser]
//! g0 = 4e-8
//! omega_L = 0.005
//! alpha_abs = 857321.85
//! phi_alpha = 0.0
//! n_cycles = 20
//! samples_per_cycle = 512
//! envelope = sin2
//!
//! [state]
//! kind = fock
//! n = 1
//!
//! [run]
//! harmonics = 3
//! sweep_L = 100, 200, 400, 800, 1600, 3200, 6400, 12800, 25600
//! seed = 1
//! ```

use crate::error::{Error, Result};
use crate::oneband::{Crystal, Envelope, LaserConfig};
use crate::phase_space::DrivingState;
use num_complex::Complex64;
use std::collections::HashMap;
use std::path::PathBuf;

/// Everything a subcommand needs for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub crystal: Crystal,
    pub laser: LaserConfig,
    pub states: Vec<DrivingState>,
    pub harmonics: Vec<u32>,
    pub sweep_l: Vec<usize>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    /// The built-in reference run: ZnO-like crystal, the reference drive, a
    /// small set of example states, harmonic 3 and a two-decade size sweep.
    pub fn reference() -> RunConfig {
        RunConfig {
            crystal: Crystal::zno(100),
            laser: LaserConfig::reference(),
            states: vec![
                DrivingState::Coherent {
                    alpha: Complex64::new(2.0, 0.0),
                },
                DrivingState::Fock { n: 1 },
                DrivingState::SqueezedVacuum { r: 1.0, phi_s: 0.0 },
                DrivingState::Thermal { nbar: 2.0 },
            ],
            harmonics: vec![3],
            sweep_l: (0..9).map(|k| 100 << k).collect(),
            output_dir: PathBuf::from("."),
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.crystal.validate()?;
        self.laser.validate()?;
        for s in &self.states {
            s.validate()?;
        }
        if let Some(n) = self.harmonics.iter().find(|&&n| n % 2 == 0) {
            return Err(Error::domain(
                "RunConfig",
                format!("harmonics must be odd, found {n}"),
            ));
        }
        if self.sweep_l.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("RunConfig", "sweep_L must be strictly ascending"));
        }
        if let Some(l) = self.sweep_l.iter().find(|&&l| l % 2 != 0) {
            return Err(Error::domain(
                "RunConfig",
                format!("sweep_L entries must be even, found {l}"),
            ));
        }
        Ok(())
    }
}

/// One parsed section: name, starting line, and key -> (line, value).
struct Section {
    name: String,
    line: usize,
    entries: HashMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<(usize, String)> {
        self.take(key).ok_or_else(|| Error::Config {
            line: self.line,
            reason: format!("section [{}] is missing key '{}'", self.name, key),
        })
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(Error::Config {
                line,
                reason: format!("unknown key '{key}' in section [{}]", self.name),
            });
        }
        Ok(())
    }
}

fn parse_scalar<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Config {
        line,
        reason: format!("cannot parse '{}' as a value for '{key}'", raw.trim()),
    })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|part| parse_scalar(line, key, part))
        .collect()
}

/// Parses the sectioned key-value format, starting from the reference
/// defaults: any section or key left out keeps its default, while the first
/// `[state]` section replaces the default state list.
pub fn parse(text: &str) -> Result<RunConfig> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Config {
                line,
                reason: format!("malformed section header '{content}'"),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                line,
                entries: HashMap::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            reason: format!("expected 'key = value', got '{content}'"),
        })?;
        let section = sections.last_mut().ok_or_else(|| Error::Config {
            line,
            reason: "key-value pair before any section header".to_string(),
        })?;
        let key = key.trim().to_string();
        if section
            .entries
            .insert(key.clone(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Config {
                line,
                reason: format!("duplicate key '{key}' in section [{}]", section.name),
            });
        }
    }

    let mut config = RunConfig::reference();
    let mut saw_state = false;
    for mut section in sections {
        match section.name.as_str() {
            "crystal" => {
                if let Some((l, v)) = section.take("a") {
                    config.crystal.a = parse_scalar(l, "a", &v)?;
                }
                if let Some((l, v)) = section.take("b") {
                    config.crystal.b = parse_list(l, "b", &v)?;
                }
                if let Some((l, v)) = section.take("sites") {
                    config.crystal.sites = parse_scalar(l, "sites", &v)?;
                }
                section.finish()?;
            }
            "laser" => {
                if let Some((l, v)) = section.take("g0") {
                    config.laser.g0 = parse_scalar(l, "g0", &v)?;
                }
                if let Some((l, v)) = section.take("omega_L") {
                    config.laser.omega_l = parse_scalar(l, "omega_L", &v)?;
                }
                if let Some((l, v)) = section.take("alpha_abs") {
                    config.laser.alpha_abs = parse_scalar(l, "alpha_abs", &v)?;
                }
                if let Some((l, v)) = section.take("phi_alpha") {
                    config.laser.phi_alpha = parse_scalar(l, "phi_alpha", &v)?;
                }
                if let Some((l, v)) = section.take("n_cycles") {
                    config.laser.n_cycles = parse_scalar(l, "n_cycles", &v)?;
                }
                if let Some((l, v)) = section.take("samples_per_cycle") {
                    config.laser.samples_per_cycle = parse_scalar(l, "samples_per_cycle", &v)?;
                }
                if let Some((l, v)) = section.take("envelope") {
                    config.laser.envelope = match v.as_str() {
                        "sin2" => Envelope::Sin2,
                        "flat" => Envelope::Flat,
                        other => {
                            return Err(Error::Config {
                                line: l,
                                reason: format!("unknown envelope '{other}' (use sin2 or flat)"),
                            })
                        }
                    };
                }
                section.finish()?;
            }
            "state" => {
                if !saw_state {
                    config.states.clear();
                    saw_state = true;
                }
                let (kl, kind) = section.require("kind")?;
                let state = match kind.as_str() {
                    "coherent" => DrivingState::Coherent {
                        alpha: read_complex(&mut section)?,
                    },
                    "fock" => {
                        let (l, v) = section.require("n")?;
                        DrivingState::Fock {
                            n: parse_scalar(l, "n", &v)?,
                        }
                    }
                    "squeezed_vacuum" => {
                        let (l, v) = section.require("r")?;
                        let r = parse_scalar(l, "r", &v)?;
                        let phi_s = match section.take("phi_s") {
                            Some((l, v)) => parse_scalar(l, "phi_s", &v)?,
                            None => 0.0,
                        };
                        DrivingState::SqueezedVacuum { r, phi_s }
                    }
                    "displaced_squeezed" => {
                        let alpha = read_complex(&mut section)?;
                        let (l, v) = section.require("r")?;
                        let r = parse_scalar(l, "r", &v)?;
                        let phi_s = match section.take("phi_s") {
                            Some((l, v)) => parse_scalar(l, "phi_s", &v)?,
                            None => 0.0,
                        };
                        DrivingState::DisplacedSqueezed { alpha, r, phi_s }
                    }
                    "thermal" => {
                        let (l, v) = section.require("nbar")?;
                        DrivingState::Thermal {
                            nbar: parse_scalar(l, "nbar", &v)?,
                        }
                    }
                    other => {
                        return Err(Error::Config {
                            line: kl,
                            reason: format!("unknown state kind '{other}'"),
                        })
                    }
                };
                section.finish()?;
                config.states.push(state);
            }
            "run" => {
                if let Some((l, v)) = section.take("harmonics") {
                    config.harmonics = parse_list(l, "harmonics", &v)?;
                }
                if let Some((l, v)) = section.take("sweep_L") {
                    config.sweep_l = parse_list(l, "sweep_L", &v)?;
                }
                if let Some((_, v)) = section.take("output_dir") {
                    config.output_dir = PathBuf::from(v);
                }
                if let Some((l, v)) = section.take("seed") {
                    config.seed = parse_scalar(l, "seed", &v)?;
                }
                section.finish()?;
            }
            other => {
                return Err(Error::Config {
                    line: section.line,
                    reason: format!("unknown section [{other}]"),
                })
            }
        }
    }
    if let Err(e) = config.validate() {
        return Err(Error::Config {
            line: 0,
            reason: e.to_string(),
        });
    }
    Ok(config)
}

fn read_complex(section: &mut Section) -> Result<Complex64> {
    let re = match section.take("re") {
        Some((l, v)) => parse_scalar(l, "re", &v)?,
        None => 0.0,
    };
    let im = match section.take("im") {
        Some((l, v)) => parse_scalar(l, "im", &v)?,
        None => 0.0,
    };
    Ok(Complex64::new(re, im))
}

/// FNV-1a hash of the raw config text, carried in output provenance comments.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
