use proptest::prelude::*;
use tempfile::tempdir;
use v2vforge_media::{
    read_container, read_manifest, write_container, write_manifest, ClipData, EditTriple,
    EditType, VideoClip,
};

fn arb_clip() -> impl Strategy<Value = VideoClip> {
    (1usize..4, prop_oneof![Just(1usize), Just(3usize)], 1usize..6, 1usize..6).prop_flat_map(
        |(n, c, h, w)| {
            let len = n * c * h * w;
            prop_oneof![
                proptest::collection::vec(any::<u8>(), len)
                    .prop_map(move |v| VideoClip::new(n, c, h, w, ClipData::U8(v)).unwrap()),
                proptest::collection::vec(0.0f32..=1.0, len)
                    .prop_map(move |v| VideoClip::new(n, c, h, w, ClipData::F32(v)).unwrap()),
            ]
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn container_roundtrip_is_bit_exact(clip in arb_clip()) {
        let dir = tempdir().unwrap();
        let path = dir.path().join("clip.rvid");
        write_container(&clip, &path).unwrap();
        let back = read_container(&path).unwrap();
        prop_assert_eq!(back, clip);
    }

    #[test]
    fn manifest_roundtrip_preserves_records(ids in proptest::collection::vec("[a-z]{1,8}", 0..6)) {
        let dir = tempdir().unwrap();
        let manifest: Vec<EditTriple> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| EditTriple {
                id: format!("{id}-{i}"),
                src: format!("{id}_src.rvid"),
                tgt: format!("{id}_tgt.rvid"),
                mask: (i % 2 == 0).then(|| format!("{id}_mask.rvid")),
                reference: (i % 3 == 0).then(|| format!("{id}_ref.rvid")),
                instruction: format!("make the {id} red"),
                edit_type: EditType::Recolor,
                origin: "prop".to_string(),
            })
            .collect();
        let path = dir.path().join("m.jsonl");
        write_manifest(&manifest, &path).unwrap();
        prop_assert_eq!(read_manifest(&path).unwrap(), manifest);
    }
}
