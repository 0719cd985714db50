#![no_main]

use libfuzzer_sys::fuzz_target;
use selsample::sampler::SeedCount;
use selsample::{HeuristicSpec, KappaSchedule, TruthSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = s.parse::<TruthSpec>() {
        assert_eq!(t.to_string().parse::<TruthSpec>().unwrap(), t);
    }
    if let Ok(h) = s.parse::<HeuristicSpec>() {
        assert_eq!(h.to_string().parse::<HeuristicSpec>().unwrap(), h);
    }
    if let Ok(k) = s.parse::<KappaSchedule>() {
        assert_eq!(k.to_string().parse::<KappaSchedule>().unwrap(), k);
    }
    if let Ok(c) = s.parse::<SeedCount>() {
        assert!(c.resolve().is_ok());
    }
});
