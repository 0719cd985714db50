#![no_main]

use libfuzzer_sys::fuzz_target;
use selsample_cli::experiment::ExperimentSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = ExperimentSpec::from_spec_text(text) {
        let again = ExperimentSpec::from_spec_text(&spec.to_spec_text()).expect("serialized spec parses");
        assert_eq!(again.to_spec_text(), spec.to_spec_text());
    }
});
