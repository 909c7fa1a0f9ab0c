#![no_main]

use bessel_herald_cli::report::{parse_profiles_csv, profiles_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(planes) = parse_profiles_csv(text) {
        let again = parse_profiles_csv(&profiles_csv(&planes)).expect("re-parse");
        assert_eq!(again.len(), planes.len());
    }
});
