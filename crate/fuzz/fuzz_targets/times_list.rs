#![no_main]

use davieskit::io;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(times) = io::parse_times(text) {
        assert!(!times.is_empty());
        assert!(times.iter().all(|t| t.is_finite() && *t >= 0.0));
        for t in times {
            let printed = io::fmt_g17(t);
            assert_eq!(printed.parse::<f64>().expect("g17 parses"), t);
        }
    }
});
