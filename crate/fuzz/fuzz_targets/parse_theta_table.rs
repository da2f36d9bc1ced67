#![no_main]

use libfuzzer_sys::fuzz_target;
use lpvssa::io::ThetaTable;

fuzz_target!(|data: &str| {
    if let Ok(table) = ThetaTable::parse(data) {
        let back = ThetaTable::parse(&table.to_json()).expect("written table parses");
        assert_eq!(back.max_len(), table.max_len());
    }
});
