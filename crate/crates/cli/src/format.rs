use std::io::{Read, Write};

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer};

/// Significant digits in CSV output.
pub const CSV_DIGITS: usize = 10;

/// `x` with `decimals` digits after the point, ties rounded to even.
pub fn fixed_half_even(x: &Float, decimals: u32) -> String {
    let scale = Integer::from(10).pow(decimals);
    let scaled = Float::with_val(x.prec() + 64, x * &scale);
    let (digits, _) = scaled
        .to_integer_round(Round::Nearest)
        .expect("ψ values are finite");
    let negative = digits < 0;
    let mut text = digits.abs().to_string();
    let width = decimals as usize + 1;
    if text.len() < width {
        text = format!("{}{text}", "0".repeat(width - text.len()));
    }
    if decimals > 0 {
        text.insert(text.len() - decimals as usize, '.');
    }
    if negative {
        text.insert(0, '-');
    }
    text
}

/// `x` to `digits` significant digits, in positional notation for magnitudes 1e-6..10.
pub fn significant(x: f64, digits: usize) -> String {
    // Round once in scientific form so that carries (0.99999999996 -> 1.000000000) settle
    // the exponent before the point is placed.
    let sci = format!("{x:.0$e}", digits - 1);
    let (mantissa, exponent) = sci
        .split_once('e')
        .expect("LowerExp output has an exponent");
    let exponent: i32 = exponent.parse().expect("LowerExp exponent is an integer");
    if x == 0.0 || !(-6..=0).contains(&exponent) {
        return if x == 0.0 {
            format!("{:.1$}", 0.0, digits - 1)
        } else {
            sci
        };
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let bare: String = mantissa.chars().filter(|c| *c != '.').collect();
    if exponent == 0 {
        format!("{sign}{}.{}", &bare[..1], &bare[1..])
    } else {
        format!("{sign}0.{}{bare}", "0".repeat((-exponent - 1) as usize))
    }
}

/// CSV with header `u,psi` and LF line endings.
pub fn write_psi_csv<W: Write>(out: W, psi: &[f64]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["u", "psi"])?;
    for (u, p) in psi.iter().enumerate() {
        w.write_record([u.to_string(), significant(*p, CSV_DIGITS)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_psi_csv<R: Read>(input: R) -> csv::Result<Vec<(usize, f64)>> {
    #[derive(serde::Deserialize)]
    struct Row {
        u: usize,
        psi: f64,
    }
    csv::Reader::from_reader(input)
        .deserialize::<Row>()
        .map(|r| r.map(|row| (row.u, row.psi)))
        .collect()
}
