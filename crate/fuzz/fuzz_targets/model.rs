#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = qnz_core::qnn::parse_model(text);
        let _ = text.parse::<qnz_core::qnn::WeightVector>();
    }
});
