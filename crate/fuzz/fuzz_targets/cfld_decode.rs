#![no_main]

use bessel_herald::io::{decode, encode_field, encode_map, Stored};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(stored) = decode(data) {
        let again = match &stored {
            Stored::Amplitude(f) => encode_field(f),
            Stored::Intensity(m) => encode_map(m),
        };
        assert_eq!(again, data);
    }
});
