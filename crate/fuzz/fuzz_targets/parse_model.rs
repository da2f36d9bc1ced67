#![no_main]

use libfuzzer_sys::fuzz_target;
use lpvssa::io::{model_to_json, parse_model, parse_model_document};

fuzz_target!(|data: &str| {
    let _ = parse_model_document(data);
    if let Ok((model, x0)) = parse_model(data) {
        // anything accepted must survive a write and re-read
        let text = model_to_json(&model, x0.as_ref());
        let (back, _) = parse_model(&text).expect("written model parses");
        assert_eq!((back.np(), back.nx(), back.nu(), back.ny()), (model.np(), model.nx(), model.nu(), model.ny()));
    }
});
