#![no_main]

use abloc_harness::dataset_io::parse_array_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((header, array)) = parse_array_csv(text) {
        assert_eq!(header.len(), array.ncols());
        assert!(array.iter().all(|v| v.is_finite()));
    }
});
