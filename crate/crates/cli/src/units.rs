//! Quantities with mandatory unit suffixes, converted to µm, rad/µm and rad.

use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Wavenumber,
    Angle,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("nm", 1e-3), ("um", 1.0), ("µm", 1.0), ("mm", 1e3), ("cm", 1e4), ("m", 1e6)],
            Dimension::Wavenumber => &[("rad/um", 1.0), ("rad/µm", 1.0), ("rad/mm", 1e-3), ("rad/m", 1e-6)],
            Dimension::Angle => &[("deg", PI / 180.0), ("rad", 1.0)],
        }
    }

    /// Unit used when writing resolved values back out.
    pub fn canonical(self) -> &'static str {
        match self {
            Dimension::Length => "um",
            Dimension::Wavenumber => "rad/um",
            Dimension::Angle => "rad",
        }
    }

    fn noun(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Wavenumber => "wavenumber",
            Dimension::Angle => "angle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitError(pub String);

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UnitError {}

fn all_units() -> impl Iterator<Item = (&'static str, Dimension)> {
    [Dimension::Length, Dimension::Wavenumber, Dimension::Angle]
        .into_iter()
        .flat_map(|d| d.units().iter().map(move |(u, _)| (*u, d)))
}

/// Parse a plain finite number.
pub fn parse_number(text: &str) -> Result<f64, UnitError> {
    let t = text.trim();
    let looks_numeric = t.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E'));
    match t.parse::<f64>() {
        Ok(v) if looks_numeric && v.is_finite() => Ok(v),
        _ => Err(UnitError(format!("'{t}' is not a finite number"))),
    }
}

/// Parse `"<number> <unit>"` (the space is optional) into canonical units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let t = text.trim();
    // longest suffix first so "cm" wins over "m"
    let mut units: Vec<_> = all_units().collect();
    units.sort_by_key(|(u, _)| std::cmp::Reverse(u.len()));
    for (unit, unit_dim) in units {
        let Some(number) = t.strip_suffix(unit) else { continue };
        let Ok(value) = parse_number(number) else { continue };
        if unit_dim != dim {
            return Err(UnitError(format!("'{unit}' is a {} unit, expected a {}", unit_dim.noun(), dim.noun())));
        }
        let scale = dim.units().iter().find(|(u, _)| *u == unit).expect("listed").1;
        let scaled = value * scale;
        if !scaled.is_finite() {
            return Err(UnitError(format!("'{t}' overflows in {}", dim.canonical())));
        }
        return Ok(scaled);
    }
    let expected: Vec<_> = dim.units().iter().map(|(u, _)| *u).collect();
    if parse_number(t).is_ok() {
        Err(UnitError(format!("'{t}' needs a {} unit ({})", dim.noun(), expected.join(", "))))
    } else {
        Err(UnitError(format!("cannot read '{t}' as a {} ({})", dim.noun(), expected.join(", "))))
    }
}

/// Canonical text for a value, reparsed exactly by [`parse_quantity`].
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value} {}", dim.canonical())
}
