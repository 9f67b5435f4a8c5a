//! Number formatting shared by reports, CSV files and cache keys.

/// `x` with `digits` significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..10).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new leading digit (9.99… → 10.0…).
        let sig = s
            .chars()
            .filter(|c| c.is_ascii_digit())
            .skip_while(|&c| c == '0')
            .count();
        if sig > digits && decimals > 0 {
            let d = decimals - 1;
            return format!("{x:.d$}");
        }
        s
    } else {
        format!("{x:.prec$e}", prec = digits - 1)
    }
}

/// Ten significant digits, the CSV convention.
pub fn csv_number(x: f64) -> String {
    significant(x, 10)
}

/// Seventeen significant digits in scientific notation; parses back to the
/// same double.
pub fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_digits() {
        assert_eq!(csv_number(1.0 / 3.0), "0.3333333333");
        assert_eq!(csv_number(0.0), "0");
        assert_eq!(csv_number(2.0), "2.000000000");
        assert_eq!(csv_number(1e-7), "1.000000000e-7");
        assert_eq!(csv_number(0.99999999999), "1.000000000");
        assert_eq!(csv_number(-0.5), "-0.5000000000");
    }

    #[test]
    fn exact_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), -1e-300, 6.02214076e23] {
            assert_eq!(exact(x).parse::<f64>().unwrap(), x);
        }
    }
}
