//! Flag-level parsers and the config-merge convention: every run is driven
//! by one JSON document (via --config) whose fields individual flags
//! override; the merged result is what executes and what the manifest echoes.

use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use std::path::Path;
use subplanck::error::{Error, Result};
use subplanck::states::Family;

/// "1.5", "-2e-3", "1.5+0.5i", "0.5i", "-i", "1e-3+2e-4i".
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if !t.ends_with('i') {
        return t
            .parse::<f64>()
            .map(|x| C64::new(x, 0.0))
            .map_err(|e| format!("bad real literal '{t}': {e}"));
    }
    let body = &t[..t.len() - 1];
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        let c = bytes[k];
        if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |part: &str| -> std::result::Result<f64, String> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            p => p.parse::<f64>().map_err(|e| format!("bad imaginary part '{p}': {e}")),
        }
    };
    match split {
        None => Ok(C64::new(0.0, imag(body)?)),
        Some(k) => {
            let re: f64 = body[..k]
                .parse()
                .map_err(|e| format!("bad real part '{}': {e}", &body[..k]))?;
            Ok(C64::new(re, imag(&body[k..])?))
        }
    }
}

/// Inclusive count list: "2", "0..2", or "0,1,3".
#[derive(Debug, Clone)]
pub struct CountList(pub Vec<u32>);

pub fn parse_count_list(s: &str) -> std::result::Result<CountList, String> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|e| format!("bad range start '{a}': {e}"))?;
        let hi: u32 = b.trim().parse().map_err(|e| format!("bad range end '{b}': {e}"))?;
        if hi < lo {
            return Err(format!("empty range {lo}..{hi}"));
        }
        return Ok(CountList((lo..=hi).collect()));
    }
    let vals = t
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|e| format!("bad count '{p}': {e}")))
        .collect::<std::result::Result<Vec<u32>, String>>()?;
    if vals.is_empty() {
        return Err("empty count list".into());
    }
    Ok(CountList(vals))
}

pub fn parse_family(s: &str) -> std::result::Result<Family, String> {
    const ALL: [Family; 7] = [
        Family::Coherent,
        Family::Cat,
        Family::KsPlus,
        Family::KsMinus,
        Family::Sq,
        Family::Ss,
        Family::Ssd,
    ];
    ALL.iter()
        .copied()
        .find(|f| f.as_str() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = ALL.iter().map(|f| f.as_str()).collect();
            format!("unknown family '{s}' (one of: {})", names.join(", "))
        })
}

/// Load a command's config document, defaulting when no file is given.
/// Unknown keys are rejected by the config types themselves.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(Error::from)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5").unwrap(), C64::new(1.5, 0.0));
        assert_eq!(parse_complex("-2e-3").unwrap(), C64::new(-2e-3, 0.0));
        assert_eq!(parse_complex("1.5+0.5i").unwrap(), C64::new(1.5, 0.5));
        assert_eq!(parse_complex("1.5-0.5i").unwrap(), C64::new(1.5, -0.5));
        assert_eq!(parse_complex("0.5i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("1e-3+2e-4i").unwrap(), C64::new(1e-3, 2e-4));
        assert_eq!(parse_complex("2.5+i").unwrap(), C64::new(2.5, 1.0));
        assert!(parse_complex("").is_err());
        assert!(parse_complex("foo").is_err());
        assert!(parse_complex("1+2j").is_err());
    }

    #[test]
    fn count_lists() {
        assert_eq!(parse_count_list("2").unwrap().0, vec![2]);
        assert_eq!(parse_count_list("0..2").unwrap().0, vec![0, 1, 2]);
        assert_eq!(parse_count_list("0,1,3").unwrap().0, vec![0, 1, 3]);
        assert!(parse_count_list("3..1").is_err());
        assert!(parse_count_list("x").is_err());
    }

    #[test]
    fn family_names() {
        assert_eq!(parse_family("ks_plus").unwrap(), Family::KsPlus);
        assert!(parse_family("ks-plus").is_err());
    }
}
