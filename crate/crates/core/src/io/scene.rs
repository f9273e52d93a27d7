use std::path::Path;

use super::{read_camera, read_depth, read_image, write_camera, write_image_png, write_pfm, IoError};
use crate::geometry::PosedView;

/// Writes `<id>.json` (camera), `<id>.pfm` (depth) and, when present,
/// `<id>.png` (image) into `dir`.
pub fn write_scene_view(dir: &Path, view: &PosedView) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let (Some(depth), Some(pose)) = (&view.depth, &view.pose) else {
        return Err(IoError::format(dir, format!("view {} has no geometry", view.id)));
    };
    write_camera(&dir.join(format!("{}.json", view.id)), &view.intrinsics, pose)?;
    write_pfm(&dir.join(format!("{}.pfm", view.id)), depth)?;
    if let Some(img) = &view.image {
        write_image_png(&dir.join(format!("{}.png", view.id)), img)?;
    }
    Ok(())
}

/// Loads every view of a scene directory, ordered by id. A view is any
/// `<id>.json` camera with a `<id>.pfm` or `<id>.png`-depth sibling; the
/// image is `<id>.png` when present (a 16-bit depth PNG is named
/// `<id>.depth.png`).
pub fn read_scene_dir(dir: &Path) -> Result<Vec<PosedView>, IoError> {
    let entries = std::fs::read_dir(dir).map_err(|e| IoError::io(dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| IoError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") && !path.to_string_lossy().ends_with(".png.json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    let mut views = Vec::with_capacity(ids.len());
    for id in ids {
        let (k, pose) = read_camera(&dir.join(format!("{id}.json")))?;
        let pfm = dir.join(format!("{id}.pfm"));
        let depth_path = if pfm.is_file() { pfm } else { dir.join(format!("{id}.depth.png")) };
        let depth = read_depth(&depth_path)?;
        let mut view = PosedView::new(id.clone(), k, pose, depth);
        let img = dir.join(format!("{id}.png"));
        if img.is_file() {
            view = view.with_image(read_image(&img)?);
        }
        views.push(view);
    }
    Ok(views)
}
