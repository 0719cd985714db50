//! Parsing of truth selectors: `disk:cx,cy,r`, `checker:k`, `image:<path>`,
//! `adv1d[:i_max]`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::domain::{build_adversarial_1d, Adversarial1d, EpsilonRule, LabelImage, TrueFunction};
use crate::error::{Error, Result};
use crate::pnm;

#[derive(Clone, Debug, PartialEq)]
pub enum TruthSpec {
    Disk { cx: f64, cy: f64, r: f64 },
    Checker { k: u32 },
    Image(PathBuf),
    Adversarial1d { i_max: u32 },
}

impl TruthSpec {
    /// Builds the labeler, reading the image file for `image:` selectors.
    pub fn load(&self) -> Result<TrueFunction> {
        match self {
            TruthSpec::Disk { cx, cy, r } => TrueFunction::disk(*cx, *cy, *r),
            TruthSpec::Checker { k } => TrueFunction::checkerboard(*k),
            TruthSpec::Image(path) => {
                let bytes = std::fs::read(path)
                    .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
                let img = pnm::decode(&bytes)?;
                Ok(TrueFunction::Image(LabelImage::from_pnm(&img)?))
            }
            TruthSpec::Adversarial1d { i_max } => {
                build_adversarial_1d(*i_max, &EpsilonRule::default())
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            TruthSpec::Adversarial1d { .. } => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for TruthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthSpec::Disk { cx, cy, r } => write!(f, "disk:{cx},{cy},{r}"),
            TruthSpec::Checker { k } => write!(f, "checker:{k}"),
            TruthSpec::Image(p) => write!(f, "image:{}", p.display()),
            TruthSpec::Adversarial1d { i_max } => write!(f, "adv1d:{i_max}"),
        }
    }
}

impl FromStr for TruthSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Selector(s.to_string(), why.to_string());
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("disk", Some(arg)) => {
                let v = arg
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| bad("disk takes three numbers"))?;
                let [cx, cy, r] = v[..] else {
                    return Err(bad("disk takes three numbers"));
                };
                TrueFunction::disk(cx, cy, r).map_err(|e| bad(&e.to_string()))?;
                Ok(TruthSpec::Disk { cx, cy, r })
            }
            ("checker", Some(arg)) => {
                let k: u32 = arg
                    .parse()
                    .map_err(|_| bad("k must be a positive integer"))?;
                if k == 0 {
                    return Err(bad("k must be a positive integer"));
                }
                Ok(TruthSpec::Checker { k })
            }
            ("image", Some(path)) if !path.is_empty() => Ok(TruthSpec::Image(PathBuf::from(path))),
            ("adv1d", None) => Ok(TruthSpec::Adversarial1d {
                i_max: Adversarial1d::DEFAULT_I_MAX,
            }),
            ("adv1d", Some(arg)) => {
                let i_max: u32 = arg.parse().map_err(|_| bad("i_max must be an integer"))?;
                if !(2..=Adversarial1d::MAX_I_MAX).contains(&i_max) {
                    return Err(bad("i_max out of range"));
                }
                Ok(TruthSpec::Adversarial1d { i_max })
            }
            _ => Err(bad(
                "expected disk:cx,cy,r, checker:k, image:<path> or adv1d[:i_max]",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_selectors() {
        assert_eq!(
            "disk:0.5,0.5,0.3".parse::<TruthSpec>().unwrap(),
            TruthSpec::Disk {
                cx: 0.5,
                cy: 0.5,
                r: 0.3
            }
        );
        assert_eq!(
            "checker:4".parse::<TruthSpec>().unwrap(),
            TruthSpec::Checker { k: 4 }
        );
        assert_eq!(
            "adv1d".parse::<TruthSpec>().unwrap(),
            TruthSpec::Adversarial1d { i_max: 20 }
        );
        assert_eq!(
            "adv1d:12".parse::<TruthSpec>().unwrap(),
            TruthSpec::Adversarial1d { i_max: 12 }
        );
        assert_eq!(
            "image:a/b.pgm".parse::<TruthSpec>().unwrap(),
            TruthSpec::Image(PathBuf::from("a/b.pgm"))
        );
        for bad in [
            "disk:1,2",
            "disk:0.5,0.5,-1",
            "checker:0",
            "image:",
            "adv1d:0",
            "square",
            "",
        ] {
            assert!(bad.parse::<TruthSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["disk:0.5,0.5,0.3", "checker:3", "adv1d:20", "image:x.ppm"] {
            let t: TruthSpec = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
            assert_eq!(t.to_string().parse::<TruthSpec>().unwrap(), t);
        }
    }

    #[test]
    fn loads_builtin_truths() {
        assert_eq!(
            "adv1d:8"
                .parse::<TruthSpec>()
                .unwrap()
                .load()
                .unwrap()
                .dimension(),
            1
        );
        assert_eq!(
            "checker:2"
                .parse::<TruthSpec>()
                .unwrap()
                .load()
                .unwrap()
                .dimension(),
            2
        );
        assert!("image:/nonexistent/x.pgm"
            .parse::<TruthSpec>()
            .unwrap()
            .load()
            .is_err());
    }
}
