#![no_main]

use davieskit::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = io::parse_matrix_json(text) {
        // what we emit must parse back to the same matrix
        let again = io::parse_matrix_json(&io::matrix_to_json(&m)).expect("round trip");
        assert_eq!(again, m);
    }
    if let Ok(phi) = io::parse_superoperator_json(text) {
        let _ = davieskit::channel::is_completely_positive(&phi, 1e-10);
        let _ = phi.trace_preservation_residual();
    }
});
