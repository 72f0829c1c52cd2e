//! Plain-text serialization of kernel-expansion test functions. The format
//! round-trips `f64` exactly (17 significant digits), so a replayed function
//! is bit-identical to the one the batch ran:
//!
//! ```text
//! kernel squared-exponential lengthscale 2.5e-1 signal_variance 1e0
//! center -3.1e-1 coeff 1.2e0
//! center 4.2e-1 coeff -7.5e-1
//! ```
//!
//! Centers list one coordinate per column; `lengthscale` lists either one
//! value (isotropic) or one per dimension.

use safebo::format_sig17;
use safebo::kernel::{KernelFamily, KernelSpec, Lengthscale};
use safebo::synth::RkhsFunction;

use crate::error::{HarnessError, Result};

/// Recovers the function id from an instance record's `# function <id>`
/// metadata comment. `None` for plain records without metadata.
pub fn recorded_function_id(text: &str) -> Option<usize> {
    text.lines().find_map(|line| {
        let rest = line.trim().strip_prefix('#')?.trim();
        rest.strip_prefix("function ")?.trim().parse().ok()
    })
}

pub fn render_function_record(f: &RkhsFunction) -> String {
    let kernel = f.kernel();
    let mut out = String::new();
    out.push_str("kernel ");
    out.push_str(kernel.family().name());
    out.push_str(" lengthscale");
    match kernel.lengthscale() {
        Lengthscale::Isotropic(l) => {
            out.push(' ');
            out.push_str(&format_sig17(*l));
        }
        Lengthscale::PerDimension(ls) => {
            for l in ls {
                out.push(' ');
                out.push_str(&format_sig17(*l));
            }
        }
    }
    out.push_str(" signal_variance ");
    out.push_str(&format_sig17(kernel.signal_variance()));
    out.push('\n');
    for (center, coeff) in f.centers().iter().zip(f.coefficients()) {
        out.push_str("center");
        for c in center {
            out.push(' ');
            out.push_str(&format_sig17(*c));
        }
        out.push_str(" coeff ");
        out.push_str(&format_sig17(*coeff));
        out.push('\n');
    }
    out
}

pub fn parse_function_record(text: &str) -> Result<RkhsFunction> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let header = lines
        .next()
        .ok_or_else(|| HarnessError::config("empty function record"))?;
    let kernel = parse_header(header)?;

    let mut centers = Vec::new();
    let mut coefficients = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.first() != Some(&"center") {
            return Err(HarnessError::config(format!(
                "expected a center line, got {line:?}"
            )));
        }
        let coeff_pos = tokens.iter().position(|&t| t == "coeff").ok_or_else(|| {
            HarnessError::config(format!("center line without coeff: {line:?}"))
        })?;
        if coeff_pos + 2 != tokens.len() {
            return Err(HarnessError::config(format!(
                "expected exactly one coefficient after coeff: {line:?}"
            )));
        }
        let coords = tokens[1..coeff_pos]
            .iter()
            .map(|t| parse_float(t))
            .collect::<Result<Vec<f64>>>()?;
        if coords.is_empty() {
            return Err(HarnessError::config(format!(
                "center line without coordinates: {line:?}"
            )));
        }
        centers.push(coords);
        coefficients.push(parse_float(tokens[coeff_pos + 1])?);
    }

    RkhsFunction::new(kernel, centers, coefficients)
        .map_err(|e| HarnessError::config(format!("inconsistent function record: {e}")))
}

fn parse_header(line: &str) -> Result<KernelSpec> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.first() != Some(&"kernel") {
        return Err(HarnessError::config(format!(
            "function record must start with a kernel line, got {line:?}"
        )));
    }
    let family = KernelFamily::parse(tokens.get(1).copied().unwrap_or(""))
        .map_err(|e| HarnessError::config(format!("bad kernel line: {e}")))?;
    if tokens.get(2) != Some(&"lengthscale") {
        return Err(HarnessError::config(format!(
            "expected lengthscale after the kernel family: {line:?}"
        )));
    }
    let sv_pos = tokens
        .iter()
        .position(|&t| t == "signal_variance")
        .ok_or_else(|| {
            HarnessError::config(format!("kernel line without signal_variance: {line:?}"))
        })?;
    if sv_pos + 2 != tokens.len() {
        return Err(HarnessError::config(format!(
            "expected exactly one value after signal_variance: {line:?}"
        )));
    }
    let scales = tokens[3..sv_pos]
        .iter()
        .map(|t| parse_float(t))
        .collect::<Result<Vec<f64>>>()?;
    let lengthscale = match scales.len() {
        0 => {
            return Err(HarnessError::config(format!(
                "kernel line without lengthscale values: {line:?}"
            )))
        }
        1 => Lengthscale::Isotropic(scales[0]),
        _ => Lengthscale::PerDimension(scales),
    };
    let signal_variance = parse_float(tokens[sv_pos + 1])?;
    KernelSpec::new(family, lengthscale, signal_variance)
        .map_err(|e| HarnessError::config(format!("bad kernel parameters: {e}")))
}

fn parse_float(token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| HarnessError::config(format!("bad number in function record: {token:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use safebo::domain::BoxDomain;
    use safebo::synth::sample_rkhs_function;

    fn sample(dim: usize, seed: u64) -> RkhsFunction {
        let kernel = KernelSpec::new(
            KernelFamily::Matern52,
            if dim == 1 {
                Lengthscale::Isotropic(0.31)
            } else {
                Lengthscale::PerDimension((0..dim).map(|d| 0.2 + 0.1 * d as f64).collect())
            },
            1.7,
        )
        .unwrap();
        let domain = BoxDomain::new(vec![-1.0; dim], vec![1.0; dim]).unwrap();
        sample_rkhs_function(&kernel, &domain, 12, 2.0, seed).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for dim in [1, 2, 3] {
            let f = sample(dim, 42 + dim as u64);
            let text = render_function_record(&f);
            let g = parse_function_record(&text).unwrap();
            assert_eq!(f.centers(), g.centers());
            assert_eq!(f.coefficients(), g.coefficients());
            let probe = vec![0.123456789; dim];
            assert_eq!(f.eval(&probe).to_bits(), g.eval(&probe).to_bits());
            // and the rendering itself is stable
            assert_eq!(render_function_record(&g), text);
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let f = sample(1, 5);
        let text = format!("# recorded function\n\n{}", render_function_record(&f));
        let g = parse_function_record(&text).unwrap();
        assert_eq!(f.coefficients(), g.coefficients());
    }

    #[test]
    fn function_id_comes_from_metadata_comments() {
        assert_eq!(recorded_function_id("# function 17\nkernel ..."), Some(17));
        assert_eq!(recorded_function_id("# true_norm 2.0\n# function 3\n"), Some(3));
        assert_eq!(recorded_function_id("kernel matern52 lengthscale 0.1"), None);
        assert_eq!(recorded_function_id("# function id unknown\n"), None);
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert!(parse_function_record("").is_err());
        assert!(parse_function_record("kernel bogus lengthscale 0.1 signal_variance 1").is_err());
        assert!(parse_function_record(
            "kernel matern52 lengthscale 0.1 signal_variance 1\ncenter 0.0 0.5"
        )
        .is_err());
        // ragged center dimensions
        assert!(parse_function_record(
            "kernel matern52 lengthscale 0.1 signal_variance 1\n\
             center 0.0 coeff 1.0\ncenter 0.1 0.2 coeff 1.0"
        )
        .is_err());
    }
}
