use lakebench_core::formats::{render_image, Raster, RenderConfig};
use lakebench_core::model::Map;

use crate::error::{Error, Result};

pub fn encode_png(raster: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&raster.rgb)
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn map_png(map: &Map, cfg: &RenderConfig) -> Result<Vec<u8>> {
    encode_png(&render_image(map, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lakebench_core::fixtures::golden_map;

    #[test]
    fn png_is_deterministic_and_decodes() {
        let cfg = RenderConfig::default();
        let a = map_png(&golden_map(), &cfg).unwrap();
        assert_eq!(a, map_png(&golden_map(), &cfg).unwrap());
        let decoder = png::Decoder::new(std::io::Cursor::new(&a));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (256, 256));
        let raster = render_image(&golden_map(), &cfg).unwrap();
        assert_eq!(&buf[..info.buffer_size()], &raster.rgb[..]);
    }
}
