#![no_main]

use bessel_herald_cli::units::{format_quantity, parse_quantity, Dimension};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for dim in [Dimension::Length, Dimension::Wavenumber, Dimension::Angle] {
        if let Ok(v) = parse_quantity(text, dim) {
            if v.is_finite() {
                assert_eq!(parse_quantity(&format_quantity(v, dim), dim), Ok(v));
            }
        }
    }
});
