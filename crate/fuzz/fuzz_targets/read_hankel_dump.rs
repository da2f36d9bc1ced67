#![no_main]

use libfuzzer_sys::fuzz_target;
use lpvssa::io::read_hankel_dump;

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = read_hankel_dump(data) {
        assert_eq!(32 + 8 * dump.matrix.len(), data.len());
    }
});
