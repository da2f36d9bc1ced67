#![no_main]

use libfuzzer_sys::fuzz_target;
use lpvssa::words::index_of;
use lpvssa::Word;

fuzz_target!(|data: &[u8]| {
    let Some((&np, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(w) = Word::parse(np as usize, text) {
        assert_eq!(Word::parse(w.np(), &w.to_string()).expect("printed word parses"), w);
        let _ = index_of(&w, w.len());
    }
});
