//! Plain-text domain configuration: one `key = value` per line, `#` starts
//! a comment.
//!
//! ```text
//! type = translated_disk_product
//! center = 0.5
//! radii = 1, 1
//! ```
//!
//! Keys: `type`, `dim`, `radii`, `matrix`, `profile`, `center`, `k`,
//! `removed_point`. Complex numbers are written `a`, `bi` or `a+bi`.
//! `polydisk_difference` takes `radii = outer ; inner`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::profile::parse_profile;

const KEYS: [&str; 8] = ["type", "dim", "radii", "matrix", "profile", "center", "k", "removed_point"];

struct Entries {
    values: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn get(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn require(&self, key: &str, kind: &str) -> Result<&(usize, String)> {
        self.get(key).ok_or_else(|| Error::Config {
            line: 0,
            message: format!("type '{kind}' requires key '{key}'"),
        })
    }

    fn reject_unused(&self, kind: &str, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.values {
            if *key != "type" && !allowed.contains(key) {
                return Err(Error::Config {
                    line: *line,
                    message: format!("key '{key}' does not apply to type '{kind}'"),
                });
            }
        }
        Ok(())
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_real(line: usize, text: &str) -> Result<f64> {
    let t = text.trim();
    t.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| config_err(line, format!("'{t}' is not a finite real number")))
}

fn parse_reals(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|x| parse_real(line, x)).collect()
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`; exponents such as `1e-3` are allowed.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().ok().filter(|x| x.is_finite()).map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let (re_text, im_text) = match split {
        Some(p) => (&body[..p], &body[p..]),
        None => ("0", body),
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    let re = re_text.parse::<f64>().ok()?;
    (re.is_finite() && im.is_finite()).then(|| Complex64::new(re, im))
}

fn parse_complexes(line: usize, text: &str) -> Result<Vec<Complex64>> {
    text.split([',', ';'])
        .map(|x| parse_complex(x).ok_or_else(|| config_err(line, format!("'{}' is not a complex number", x.trim()))))
        .collect()
}

fn parse_entries(text: &str) -> Result<Entries> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, "expected 'key = value'"))?;
        let key = key.trim();
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| config_err(line, format!("unknown key '{key}'")))?;
        if values.insert(*known, (line, value.trim().to_string())).is_some() {
            return Err(config_err(line, format!("duplicate key '{key}'")));
        }
    }
    Ok(Entries { values })
}

fn wrap(line: usize, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => config_err(line, other.to_string()),
    }
}

/// Parses a domain configuration into a catalog [`DomainSpec`].
pub fn parse_domain_config(text: &str) -> Result<DomainSpec> {
    let entries = parse_entries(text)?;
    let (type_line, kind) = entries.require("type", "any")?.clone();
    let dim = entries
        .get("dim")
        .map(|(line, v)| {
            v.parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| config_err(*line, format!("dim must be a positive integer, got '{v}'")))
                .map(|n| (*line, n))
        })
        .transpose()?;
    let check_dim = |n: usize| -> Result<()> {
        match dim {
            Some((line, d)) if d != n => Err(config_err(line, format!("dim = {d} but the parameters describe dimension {n}"))),
            _ => Ok(()),
        }
    };
    let radius = |default: f64| -> Result<f64> {
        match entries.get("radii") {
            Some((line, v)) => parse_real(*line, v),
            None => Ok(default),
        }
    };
    let spec = match kind.as_str() {
        "polydisk" => {
            entries.reject_unused(&kind, &["dim", "radii"])?;
            let (line, v) = entries.require("radii", &kind)?;
            let radii = parse_reals(*line, v)?;
            check_dim(radii.len())?;
            DomainSpec::polydisk(radii).map_err(|e| wrap(*line, e))?
        }
        "ball" => {
            entries.reject_unused(&kind, &["dim", "radii"])?;
            let n = dim.map_or(2, |d| d.1);
            DomainSpec::ball(n, radius(1.0)?).map_err(|e| wrap(type_line, e))?
        }
        "linear_image_ball" => {
            entries.reject_unused(&kind, &["dim", "matrix"])?;
            let (line, v) = entries.require("matrix", &kind)?;
            let flat = parse_complexes(*line, v)?;
            let n = (flat.len() as f64).sqrt().round() as usize;
            if n * n != flat.len() || n == 0 {
                return Err(config_err(*line, format!("matrix needs n^2 entries, got {}", flat.len())));
            }
            check_dim(n)?;
            let matrix = flat.chunks(n).map(<[Complex64]>::to_vec).collect();
            DomainSpec::linear_image_ball(matrix).map_err(|e| wrap(*line, e))?
        }
        "profile" => {
            entries.reject_unused(&kind, &["dim", "profile"])?;
            check_dim(2)?;
            let (line, v) = entries.require("profile", &kind)?;
            DomainSpec::profile(parse_profile(v).map_err(|e| wrap(*line, e))?)
        }
        "exp_profile" => {
            entries.reject_unused(&kind, &["dim", "k"])?;
            check_dim(2)?;
            let (line, v) = entries.require("k", &kind)?;
            let k = v
                .parse::<u32>()
                .map_err(|_| config_err(*line, format!("k must be 0 or 1, got '{v}'")))?;
            DomainSpec::exp_profile(k).map_err(|e| wrap(*line, e))?
        }
        "translated_disk_product" => {
            entries.reject_unused(&kind, &["dim", "center", "radii"])?;
            check_dim(2)?;
            let (line, v) = entries.require("center", &kind)?;
            let center = parse_complex(v).ok_or_else(|| config_err(*line, format!("'{v}' is not a complex number")))?;
            let (r1, r2) = match entries.get("radii") {
                Some((l, v)) => match parse_reals(*l, v)?.as_slice() {
                    [a, b] => (*a, *b),
                    _ => return Err(config_err(*l, "radii must be 'r1, r2'")),
                },
                None => (1.0, 1.0),
            };
            DomainSpec::translated_disk_product(center, r1, r2).map_err(|e| wrap(*line, e))?
        }
        "quasi_circular_cubic" => {
            entries.reject_unused(&kind, &["dim"])?;
            check_dim(2)?;
            DomainSpec::quasi_circular_cubic()
        }
        "mixed_quasi_reinhardt" => {
            entries.reject_unused(&kind, &["dim"])?;
            check_dim(3)?;
            DomainSpec::mixed_quasi_reinhardt()
        }
        "polydisk_difference" => {
            entries.reject_unused(&kind, &["dim", "radii"])?;
            let (line, v) = entries.require("radii", &kind)?;
            let (outer, inner) = v
                .split_once(';')
                .ok_or_else(|| config_err(*line, "radii must be 'outer radii ; inner radii'"))?;
            let outer = parse_reals(*line, outer)?;
            let inner = parse_reals(*line, inner)?;
            check_dim(outer.len())?;
            DomainSpec::polydisk_difference(outer, inner).map_err(|e| wrap(*line, e))?
        }
        "punctured_ball" => {
            entries.reject_unused(&kind, &["dim", "radii", "removed_point"])?;
            let removed = match entries.get("removed_point") {
                Some((line, v)) => parse_complexes(*line, v)?,
                None => vec![Complex64::new(0.0, 0.0); dim.map_or(2, |d| d.1)],
            };
            check_dim(removed.len())?;
            DomainSpec::punctured_ball(radius(1.0)?, removed).map_err(|e| wrap(type_line, e))?
        }
        other => return Err(config_err(type_line, format!("unknown domain type '{other}'"))),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.5"), Some(c(0.5, 0.0)));
        assert_eq!(parse_complex("1+2i"), Some(c(1.0, 2.0)));
        assert_eq!(parse_complex("1 - 2.5i"), Some(c(1.0, -2.5)));
        assert_eq!(parse_complex("-i"), Some(c(0.0, -1.0)));
        assert_eq!(parse_complex("i"), Some(c(0.0, 1.0)));
        assert_eq!(parse_complex("3i"), Some(c(0.0, 3.0)));
        assert_eq!(parse_complex("1e-3+2e+1i"), Some(c(1e-3, 20.0)));
        assert_eq!(parse_complex("-2e-1-i"), Some(c(-0.2, -1.0)));
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex(""), None);
    }

    #[test]
    fn catalog_types() {
        let spec = parse_domain_config("type = polydisk\nradii = 1, 2\n").unwrap();
        assert!(matches!(spec.shape(), Shape::Polydisk { radii } if radii == &vec![1.0, 2.0]));

        let spec = parse_domain_config("# unit ball\ntype = ball\ndim = 3\n").unwrap();
        assert_eq!(spec.dim(), 3);

        let spec = parse_domain_config("type = linear_image_ball\nmatrix = 1, 1, 0, 1\n").unwrap();
        assert_eq!(spec.dim(), 2);

        let spec = parse_domain_config("type = profile\nprofile = exp(-r^0.5)  # omega zero\n").unwrap();
        assert_eq!(spec.kind(), "profile");

        let spec = parse_domain_config("type = exp_profile\nk = 1\n").unwrap();
        assert!(matches!(spec.shape(), Shape::ExpProfileFamily { k: 1 }));

        let spec = parse_domain_config("type = translated_disk_product\ncenter = 0.5\n").unwrap();
        assert!(matches!(spec.shape(), Shape::TranslatedDiskProduct { r1, .. } if *r1 == 1.0));

        let spec = parse_domain_config("type = polydisk_difference\nradii = 2, 2 ; 1, 1\n").unwrap();
        assert_eq!(spec.dim(), 2);

        let spec = parse_domain_config("type = punctured_ball\nremoved_point = 0.1+0.2i, 0\n").unwrap();
        assert!(spec.declared_action().is_none());

        assert_eq!(parse_domain_config("type = mixed_quasi_reinhardt").unwrap().dim(), 3);
        assert_eq!(parse_domain_config("type = quasi_circular_cubic").unwrap().dim(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = |t: &str| match parse_domain_config(t) {
            Err(Error::Config { line, message }) => (line, message),
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(err("type = ball\ncolour = red\n").0, 2);
        assert!(err("type = ball\nradii = 1\nradii = 2\n").1.contains("duplicate"));
        assert!(err("type = teapot\n").1.contains("unknown domain type"));
        assert!(err("type = polydisk\nradii = 1, 1\ndim = 3\n").1.contains("dim"));
        assert!(err("type = polydisk\nradii = 1, 1\nk = 1\n").1.contains("does not apply"));
        assert_eq!(err("type = profile\n\nprofile = 1/(\n").0, 3);
        assert_eq!(err("type = exp_profile\nk = 2\n").0, 2);
        assert!(err("radii = 1\n").1.contains("type"));
        assert_eq!(err("type = ball\njust text\n").0, 2);
    }
}
