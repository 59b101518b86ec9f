//! Named states and channels accepted on the command line and in configs.

use std::fmt;
use std::str::FromStr;

use minentlab::quantum::{bell, dephase, depolarizing, identity_channel, maximally_entangled, schmidt_state};
use minentlab::random::random_channel;
use minentlab::{Channel, ComplexMatrix, DensityOperator, C64};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Channel families: `identity`, `dephasing`, `depolarizing:<λ>`, `random:<kraus>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelSpec {
    Identity,
    Dephasing,
    Depolarizing { lambda: f64 },
    Random { kraus: usize },
}

impl FromStr for ChannelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("identity", None) => Ok(ChannelSpec::Identity),
            ("dephasing", None) => Ok(ChannelSpec::Dephasing),
            ("depolarizing", Some(a)) => match a.parse::<f64>() {
                Ok(lambda) if (0.0..=1.0).contains(&lambda) => Ok(ChannelSpec::Depolarizing { lambda }),
                _ => Err(format!("depolarizing parameter \"{a}\" must lie in [0, 1]")),
            },
            ("random", Some(a)) => match a.parse::<usize>() {
                Ok(kraus) if kraus >= 1 => Ok(ChannelSpec::Random { kraus }),
                _ => Err(format!("random channel needs a Kraus count ≥ 1, got \"{a}\"")),
            },
            _ => Err(format!(
                "unknown channel \"{s}\"; expected identity, dephasing, depolarizing:<λ> or random:<kraus>"
            )),
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Identity => write!(f, "identity"),
            ChannelSpec::Dephasing => write!(f, "dephasing"),
            ChannelSpec::Depolarizing { lambda } => write!(f, "depolarizing:{lambda}"),
            ChannelSpec::Random { kraus } => write!(f, "random:{kraus}"),
        }
    }
}

impl ChannelSpec {
    pub fn build<R: Rng + ?Sized>(self, dim: usize, rng: &mut R) -> minentlab::Result<Channel> {
        match self {
            ChannelSpec::Identity => Ok(identity_channel(dim)),
            ChannelSpec::Dephasing => Ok(dephase(dim)),
            ChannelSpec::Depolarizing { lambda } => depolarizing(dim, lambda),
            ChannelSpec::Random { kraus } => Ok(random_channel(rng, dim, dim, kraus)),
        }
    }
}

/// A bipartite state given by name, by amplitudes or by its full matrix.
/// Complex entries are `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Pure { amplitudes: Vec<[f64; 2]>, dims: Vec<usize> },
    Mixed { matrix: Vec<Vec<[f64; 2]>>, dims: Vec<usize> },
}

fn parse_arg<T: FromStr>(name: &str, arg: Option<&str>) -> minentlab::Result<T> {
    arg.and_then(|a| a.parse().ok())
        .ok_or_else(|| minentlab::Error::InvalidInput(format!("state {name} needs a numeric parameter")))
}

impl StateSpec {
    /// Names: `bell`, `max-entangled:<d>`, `max-mixed:<d>` (on d ⊗ d),
    /// `depolarized-bell:<λ>`, `schmidt:<w1>,<w2>,…`.
    pub fn build(&self) -> minentlab::Result<DensityOperator> {
        match self {
            StateSpec::Named(s) => {
                let (name, arg) = match s.split_once(':') {
                    Some((n, a)) => (n, Some(a)),
                    None => (s.as_str(), None),
                };
                match name {
                    "bell" if arg.is_none() => Ok(bell()),
                    "max-entangled" => maximally_entangled(parse_arg(name, arg)?),
                    "max-mixed" => {
                        let d: usize = parse_arg(name, arg)?;
                        DensityOperator::maximally_mixed(vec![d, d])
                    }
                    "depolarized-bell" => {
                        let lambda: f64 = parse_arg(name, arg)?;
                        let mixed = DensityOperator::maximally_mixed(vec![2, 2])?;
                        DensityOperator::mixture(&[1.0 - lambda, lambda], &[bell(), mixed])
                    }
                    "schmidt" => {
                        let weights = arg
                            .unwrap_or("")
                            .split(',')
                            .map(|w| w.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| minentlab::Error::InvalidInput("schmidt weights must be numbers".into()))?;
                        schmidt_state(&weights)
                    }
                    _ => Err(minentlab::Error::InvalidInput(format!(
                        "unknown state \"{s}\"; expected bell, max-entangled:<d>, max-mixed:<d>, depolarized-bell:<λ> or schmidt:<weights>"
                    ))),
                }
            }
            StateSpec::Pure { amplitudes, dims } => {
                let amps: Vec<C64> = amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
                DensityOperator::pure(&amps, dims.clone())
            }
            StateSpec::Mixed { matrix, dims } => {
                let rows: Vec<Vec<C64>> = matrix
                    .iter()
                    .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
                    .collect();
                DensityOperator::new(ComplexMatrix::from_rows(&rows)?, dims.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn channel_names_round_trip() {
        for s in ["identity", "dephasing", "depolarizing:0.5", "random:3"] {
            assert_eq!(s.parse::<ChannelSpec>().unwrap().to_string(), s);
        }
        assert!("depolarizing:1.5".parse::<ChannelSpec>().is_err());
        assert!("random:0".parse::<ChannelSpec>().is_err());
        assert!("amplitude-damping".parse::<ChannelSpec>().is_err());
    }

    #[test]
    fn channels_have_requested_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ch = ChannelSpec::Random { kraus: 2 }.build(3, &mut rng).unwrap();
        assert_eq!((ch.in_dim(), ch.out_dim(), ch.kraus().len()), (3, 3, 2));
    }

    #[test]
    fn named_states() {
        let b = StateSpec::Named("bell".into()).build().unwrap();
        assert_eq!(b.dims(), &[2, 2]);
        let m = StateSpec::Named("max-mixed:3".into()).build().unwrap();
        assert!((m.matrix()[(0, 0)].re - 1.0 / 9.0).abs() < 1e-15);
        let s = StateSpec::Named("schmidt:0.9,0.1".into()).build().unwrap();
        assert_eq!(s.dims(), &[2, 2]);
        assert!(StateSpec::Named("ghz".into()).build().is_err());
        assert!(StateSpec::Named("max-mixed".into()).build().is_err());
    }

    #[test]
    fn states_from_json() {
        let s: StateSpec = serde_json::from_str(r#"{"amplitudes": [[1,0],[0,0],[0,0],[0,0]], "dims": [2,2]}"#).unwrap();
        assert!(matches!(s, StateSpec::Pure { .. }));
        let rho = s.build().unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        let m: StateSpec = serde_json::from_str(r#"{"matrix": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]], "dims": [1,2]}"#).unwrap();
        assert_eq!(m.build().unwrap().dims(), &[1, 2]);
    }
}
