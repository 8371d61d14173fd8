#![no_main]

use fredholm::construct::parse_properize_toml;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_properize_toml(text);
    }
});
