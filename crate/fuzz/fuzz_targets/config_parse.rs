#![no_main]

use bessel_herald_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        let rendered = cfg.render();
        assert_eq!(RunConfig::parse(&rendered).as_ref(), Ok(&cfg), "{rendered}");
    }
});
