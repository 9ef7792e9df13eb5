#![no_main]

use abloc_harness::{parse_config, render_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = parse_config(text) {
        // Anything accepted must survive a render/parse cycle unchanged.
        let again = parse_config(&render_config(&config)).expect("rendered config parses");
        assert_eq!(again, config);
    }
});
