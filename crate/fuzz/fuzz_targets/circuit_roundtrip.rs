#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // anything the parser accepts must survive a write and reparse unchanged
        if let Ok(c) = qnz_core::circuit::parse_circuit(text) {
            let again = qnz_core::circuit::parse_circuit(&qnz_core::circuit::write_circuit(&c))
                .expect("written circuit reparses");
            assert_eq!(again, c);
        }
    }
});
