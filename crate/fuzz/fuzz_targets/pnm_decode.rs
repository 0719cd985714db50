#![no_main]

use libfuzzer_sys::fuzz_target;
use selsample::pnm;
use selsample::LabelImage;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = pnm::decode(data) {
        let again = pnm::decode(&img.encode()).expect("encoded image decodes");
        assert_eq!(again, img);
        let _ = LabelImage::from_pnm(&img);
    }
});
