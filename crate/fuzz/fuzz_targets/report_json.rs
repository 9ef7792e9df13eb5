#![no_main]

use abloc_harness::parse_report;
use abloc_harness::report::report_to_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = parse_report(text) {
        let again = parse_report(&report_to_json(&report)).expect("re-serialized report parses");
        assert_eq!(again, report);
    }
});
