//! Random exploration on the default scene, written as a JSONL log and read
//! back.

use std::io::BufReader;

use selfservo::sim::{explore_scene, read_log, write_log, SceneSpec, DEFAULT_ACTION_SCALE};

fn main() -> selfservo::Result<()> {
    let log = explore_scene(&SceneSpec::default(), 3, 100, DEFAULT_ACTION_SCALE)?;
    let alive = log.tracks.iter().filter(|t| t.is_full()).count();
    let on_arm = log.body_mask.iter().filter(|&&b| b).count();
    println!("{} frames, {} tracks ({on_arm} on the arm), {alive} alive throughout", log.frames.len(), log.tracks.len());

    let dir = std::env::temp_dir().join("selfservo_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("explore_seed3.jsonl");
    write_log(&log, std::fs::File::create(&path)?)?;
    let back = read_log(BufReader::new(std::fs::File::open(&path)?))?;
    println!("wrote {} ({} bytes), round trip equal: {}", path.display(), std::fs::metadata(&path)?.len(), back.tracks == log.tracks);
    Ok(())
}
