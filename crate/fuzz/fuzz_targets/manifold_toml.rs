#![no_main]

use fredholm::geometry::parse_manifold_toml;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_manifold_toml(text);
    }
});
