//! `--source` specifications.

use std::path::PathBuf;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Signed;

use digitmeasure::sources::{file_stream, rational_digits, sample_stream, sqrt_digits, steinhaus_example_stream};
use digitmeasure::{parse_rational, Base, DigitDistribution, DigitStream, Error, Rational};

#[derive(Clone, Debug)]
pub enum SourceSpec {
    Rational(Rational),
    Sqrt(BigUint),
    Sample { dist: PathBuf, seed: u64 },
    Steinhaus(u32),
    File(PathBuf),
}

impl FromStr for SourceSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected <kind>:<argument>, got {s:?}"))?;
        match kind {
            "rational" => {
                let x = parse_rational(rest).map_err(|e| e.to_string())?;
                if x.is_negative() {
                    return Err(format!("rational source must be nonnegative, got {x}"));
                }
                // Only the fractional digits matter; the integer part is dropped.
                Ok(SourceSpec::Rational(&x - x.floor()))
            }
            "sqrt" => rest
                .parse()
                .map(SourceSpec::Sqrt)
                .map_err(|_| format!("sqrt source needs a positive integer, got {rest:?}")),
            "sample" => {
                let (path, seed) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| "sample source is sample:<distfile>:<seed>".to_string())?;
                let seed = seed.parse().map_err(|_| format!("bad seed {seed:?}"))?;
                Ok(SourceSpec::Sample { dist: PathBuf::from(path), seed })
            }
            "steinhaus" => rest
                .parse()
                .map(SourceSpec::Steinhaus)
                .map_err(|_| format!("steinhaus source needs a digit, got {rest:?}")),
            "file" => Ok(SourceSpec::File(PathBuf::from(rest))),
            other => Err(format!("unknown source kind {other:?}")),
        }
    }
}

impl SourceSpec {
    /// The base implied by the source itself, if any.
    pub fn natural_base(&self) -> Result<Option<Base>, Error> {
        match self {
            SourceSpec::Sample { dist, .. } => Ok(Some(DigitDistribution::from_file(dist)?.base())),
            _ => Ok(None),
        }
    }

    pub fn open(&self, base: Base) -> Result<Box<dyn DigitStream>, Error> {
        Ok(match self {
            SourceSpec::Rational(x) => Box::new(rational_digits(x, base)?),
            SourceSpec::Sqrt(m) => Box::new(sqrt_digits(m, base)?),
            SourceSpec::Sample { dist, seed } => {
                let dist = DigitDistribution::from_file(dist)?;
                base.ensure_same(dist.base())?;
                Box::new(sample_stream(&dist, *seed))
            }
            SourceSpec::Steinhaus(a) => Box::new(steinhaus_example_stream(*a, base)?),
            SourceSpec::File(path) => Box::new(file_stream(path, base)?),
        })
    }
}
