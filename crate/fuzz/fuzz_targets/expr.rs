#![no_main]

use fredholm::expr::{lower_complex, parse_ast, parse_real};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = parse_real(text, &["x1", "x2"]) {
        let _ = e.eval(&[0.5, -1.25]);
        let _ = e.derivative(0);
    }
    if let Ok(ast) = parse_ast(text) {
        let _ = lower_complex(&ast);
    }
});
