#![no_main]

use libfuzzer_sys::fuzz_target;
use lpvssa::io::{parse_signals, Signals};

fuzz_target!(|data: &str| {
    if let Ok(Signals::Continuous { u, p }) = parse_signals(data) {
        // interpolation must be total on the grid
        let _ = u.at(u.t_end());
        let _ = p.at(p.t0());
    }
});
