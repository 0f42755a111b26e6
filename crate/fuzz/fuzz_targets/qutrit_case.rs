#![no_main]

use davieskit::{io, qutrit};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(case) = io::parse_qutrit_case(text) else {
        return;
    };
    if let Ok(params) = case.params_unchecked() {
        let report = qutrit::is_davies_qutrit(&params);
        serde_json::to_string(&report).expect("report serializes");
        let _ = qutrit::log_stochastic(&params.f);
        let _ = qutrit::inequality_g(&params.f);
    }
});
