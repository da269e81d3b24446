use panoptrack::io::{
    decode_rgb, encode_rgb, read_detections, read_panoptic_png, read_sequence_dir,
    write_detections, write_panoptic_png, write_sequence_dir, DetectionsFile,
};
use panoptrack::sim::{detections_from_gt, generate_sequence, synth_embeddings, SimConfig};
use panoptrack::{rle_decode, rle_encode, BitMask, ClassTable, Error, PanopticMap, RleMask};
use proptest::prelude::*;

fn panoptic(w: u32, h: u32, cells: &[(u8, u16)]) -> PanopticMap {
    let mut m = PanopticMap::filled(w, h, 0).unwrap();
    for (k, &(c, id)) in cells.iter().enumerate().take((w * h) as usize) {
        let (x, y) = (k as u32 % w, k as u32 / w);
        match c % 4 {
            0 => m.set(x, y, (c % 11) as u16, 0),
            1 => m.set(x, y, 13, id as u32 * 2 + 1),
            2 => m.set(x, y, 11, id as u32 * 2 + 2),
            _ => m.set(x, y, 255, 0),
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn png_round_trip(w in 1u32..24, h in 1u32..24, cells in prop::collection::vec((any::<u8>(), 0u16..32000), 576)) {
        let t = ClassTable::kitti_step();
        let m = panoptic(w, h, &cells);
        prop_assert_eq!(decode_rgb(w, h, &encode_rgb(&m).unwrap(), &t).unwrap(), m.clone());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("000000.png");
        write_panoptic_png(&m, &p).unwrap();
        prop_assert_eq!(read_panoptic_png(&p, &t).unwrap(), m);
    }

    #[test]
    fn rle_round_trip(w in 1u32..40, h in 1u32..40, bits in prop::collection::vec(any::<bool>(), 1600)) {
        let m = BitMask::from_bools(w, h, &bits[..(w * h) as usize]).unwrap();
        let r = rle_encode(&m);
        prop_assert_eq!(rle_decode(&r), m);
        let json = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<RleMask>(&json).unwrap(), r);
    }

    #[test]
    fn detections_round_trip(seed in any::<u64>(), noise in 0.0f64..0.3) {
        let out = generate_sequence(&SimConfig { width: 40, height: 30, frames: 4, embedding_dim: 5, seed, ..SimConfig::default() }).unwrap();
        let emb = synth_embeddings(&out, noise, seed).unwrap();
        let dets = detections_from_gt(&out.gt, &emb, Some(&out.offsets)).unwrap();
        let f = DetectionsFile::from_frames(40, 30, 5, &dets).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        write_detections(&f, &p).unwrap();
        let back = read_detections(&p).unwrap();
        prop_assert_eq!(&back, &f);
        for (t, frame) in dets.iter().enumerate() {
            prop_assert_eq!(&back.detections_at(t).unwrap(), frame);
        }
    }
}

#[test]
fn readers_reject_with_location() {
    let t = ClassTable::kitti_step();
    let dir = tempfile::tempdir().unwrap();
    let seq = generate_sequence(&SimConfig {
        frames: 3,
        embedding_dim: 8,
        seed: 5,
        ..SimConfig::default()
    })
    .unwrap()
    .gt;
    write_sequence_dir(&seq, dir.path()).unwrap();
    assert_eq!(read_sequence_dir(dir.path(), &t).unwrap(), seq);

    // A stuff pixel carrying an instance id names the offending file.
    let bad = dir.path().join("000002.png");
    let mut m = seq.frames()[2].clone();
    m.set(0, 0, 0, 7);
    std::fs::write(&bad, b"").unwrap();
    let mut bytes = encode_rgb(&m).unwrap();
    bytes[2] = 7;
    let f = std::fs::File::create(&bad).unwrap();
    let mut enc = png::Encoder::new(f, m.width(), m.height());
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header()
        .unwrap()
        .write_image_data(&bytes)
        .unwrap();
    match read_sequence_dir(dir.path(), &t) {
        Err(Error::Format { path, .. }) => assert!(path.ends_with("000002.png")),
        other => panic!("{other:?}"),
    }

    let p = dir.path().join("d.json");
    std::fs::write(
        &p,
        r#"{"version":2,"width":1,"height":1,"embedding_dim":1,"frames":[]}"#,
    )
    .unwrap();
    match read_detections(&p) {
        Err(Error::Schema { field, .. }) => assert_eq!(field, "version"),
        other => panic!("{other:?}"),
    }
}
