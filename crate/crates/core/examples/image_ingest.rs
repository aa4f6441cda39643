//! Reads a folder of class subfolders of images as a labelled dataset.
//! Pass a folder path, or run without arguments to use a generated one.

use std::path::PathBuf;

use drjudge::data::ingest_image_folder;
use image::{GrayImage, Luma};

fn main() -> drjudge::Result<()> {
    let (root, _keep) = match std::env::args().nth(1) {
        Some(p) => (PathBuf::from(p), None),
        None => {
            let dir = tempfile::tempdir().map_err(|e| drjudge::Error::Data(e.to_string()))?;
            for (class, stripes) in [("horizontal", false), ("vertical", true)] {
                let sub = dir.path().join(class);
                std::fs::create_dir_all(&sub).map_err(|e| drjudge::Error::Data(e.to_string()))?;
                for i in 0..5u32 {
                    let img = GrayImage::from_fn(32, 32, |x, y| {
                        let c = if stripes { x } else { y };
                        Luma([if (c / (2 + i)) % 2 == 0 { 230 } else { 20 }])
                    });
                    img.save(sub.join(format!("{i}.png"))).map_err(|e| drjudge::Error::Data(e.to_string()))?;
                }
            }
            (dir.path().to_path_buf(), Some(dir))
        }
    };
    let ingest = ingest_image_folder(&root, 16)?;
    let ds = &ingest.dataset;
    println!("{} images of {} pixels, classes {:?}", ds.len(), ds.dim(), ingest.class_names);
    for (path, why) in &ingest.report.skipped {
        println!("skipped {}: {why}", path.display());
    }
    Ok(())
}
