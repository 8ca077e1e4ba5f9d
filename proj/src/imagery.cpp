#include "aoitr/imagery.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aoitr/error.hpp"

namespace aoitr::img {

using nlohmann::json;

RasterPatch::RasterPatch(int h_, int w_, const BBox& bbox_, std::uint8_t fill)
    : h(h_), w(w_), bbox(bbox_), pixels() {
    require(h > 0 && w > 0, "raster dims must be positive");
    pixels.assign(size_t(h) * w * c, fill);
}

void RasterPatch::validate() const {
    require(h > 0 && w > 0, "raster dims must be positive");
    require(c == 3, "raster must be 3-channel");
    require(pixels.size() == size_t(h) * w * c, "raster pixel buffer size mismatch");
}

TileGrid TileGrid::empty(int rows, int cols, int tile_px, const BBox& bbox) {
    require(rows > 0 && cols > 0 && tile_px > 0, "tile grid dims must be positive");
    TileGrid g;
    g.rows = rows;
    g.cols = cols;
    g.tile_px = tile_px;
    g.bbox = bbox;
    g.tiles.assign(size_t(rows) * cols, std::nullopt);
    return g;
}

BBox TileGrid::cell_bbox(int r, int c) const {
    const double cw = bbox.width() / cols;
    const double ch = bbox.height() / rows;
    return BBox(GeoPoint(bbox.min.x + c * cw, bbox.max.y - (r + 1) * ch),
                GeoPoint(bbox.min.x + (c + 1) * cw, bbox.max.y - r * ch));
}

RasterPatch stitch_and_crop(const TileGrid& grid, GeoPoint center, double window_deg) {
    require(grid.rows > 0 && grid.cols > 0 && grid.tile_px > 0, "empty tile grid");
    require(grid.tiles.size() == size_t(grid.rows) * grid.cols, "tile grid buffer mismatch");
    require(window_deg > 0.0, "window must be positive");
    require(grid.bbox.contains(center), "crop center outside the mosaic");

    const int W = grid.cols * grid.tile_px;
    const int H = grid.rows * grid.tile_px;
    const double degpx_x = grid.bbox.width() / W;
    const double degpx_y = grid.bbox.height() / H;

    const int wpx = int(std::lround(window_deg / degpx_x));
    const int hpx = int(std::lround(window_deg / degpx_y));
    require(wpx > 0 && hpx > 0, "window smaller than one pixel");
    require(wpx <= W && hpx <= H, "window larger than the mosaic");

    const GeoPoint cpx = geo::geo_to_pixel(center, grid.bbox, W, H);
    int x0 = int(std::lround(cpx.x - wpx / 2.0));
    int y0 = int(std::lround(cpx.y - hpx / 2.0));
    bool clamped = false;
    if (x0 < 0) { x0 = 0; clamped = true; }
    if (y0 < 0) { y0 = 0; clamped = true; }
    if (x0 > W - wpx) { x0 = W - wpx; clamped = true; }
    if (y0 > H - hpx) { y0 = H - hpx; clamped = true; }

    // Every tile the window touches must be present and well-formed.
    const int tr0 = y0 / grid.tile_px, tr1 = (y0 + hpx - 1) / grid.tile_px;
    const int tc0 = x0 / grid.tile_px, tc1 = (x0 + wpx - 1) / grid.tile_px;
    std::vector<std::string> sources;
    for (int r = tr0; r <= tr1; ++r) {
        for (int c = tc0; c <= tc1; ++c) {
            const auto& tile = grid.at(r, c);
            if (!tile) {
                std::ostringstream os;
                os << "stitch_and_crop: missing tile at row " << r << ", col " << c
                   << " (crop needs tile rows " << tr0 << ".." << tr1 << ", cols "
                   << tc0 << ".." << tc1 << ")";
                fail(os.str());
            }
            tile->validate();
            require(tile->h == grid.tile_px && tile->w == grid.tile_px,
                    "tile raster size does not match grid tile_px");
            const BBox want = grid.cell_bbox(r, c);
            require(std::abs(tile->bbox.min.x - want.min.x) < 1e-9 &&
                        std::abs(tile->bbox.min.y - want.min.y) < 1e-9 &&
                        std::abs(tile->bbox.max.x - want.max.x) < 1e-9 &&
                        std::abs(tile->bbox.max.y - want.max.y) < 1e-9,
                    "tile bbox does not match its grid cell");
            if (tile->source_tiles.empty()) {
                sources.push_back("tile_" + std::to_string(r) + "_" + std::to_string(c));
            } else {
                sources.insert(sources.end(), tile->source_tiles.begin(),
                               tile->source_tiles.end());
            }
        }
    }

    const BBox out_bbox(
        GeoPoint(grid.bbox.min.x + x0 * degpx_x, grid.bbox.max.y - (y0 + hpx) * degpx_y),
        GeoPoint(grid.bbox.min.x + (x0 + wpx) * degpx_x, grid.bbox.max.y - y0 * degpx_y));
    RasterPatch out(hpx, wpx, out_bbox);
    out.source_tiles = std::move(sources);
    out.clamped = clamped;
    for (int y = 0; y < hpx; ++y) {
        const int my = y0 + y;
        const RasterPatch& row_tile0 = *grid.at(my / grid.tile_px, tc0);
        (void)row_tile0;
        for (int x = 0; x < wpx; ++x) {
            const int mx = x0 + x;
            const RasterPatch& tile = *grid.at(my / grid.tile_px, mx / grid.tile_px);
            const int ty = my % grid.tile_px, tx = mx % grid.tile_px;
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = tile.at(ty, tx, ch);
        }
    }
    return out;
}

void write_ppm(const std::string& path, const RasterPatch& patch) {
    patch.validate();
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for write: " + path);
    f << "P6\n" << patch.w << " " << patch.h << "\n255\n";
    f.write(reinterpret_cast<const char*>(patch.pixels.data()),
            std::streamsize(patch.pixels.size()));
    require(f.good(), "short write: " + path);
    f.close();

    json meta;
    meta["bbox"] = {patch.bbox.min.x, patch.bbox.min.y, patch.bbox.max.x, patch.bbox.max.y};
    meta["source_tiles"] = patch.source_tiles;
    meta["clamped"] = patch.clamped;
    std::ofstream m(path + ".json");
    require(m.good(), "cannot open for write: " + path + ".json");
    m << meta.dump(2) << "\n";
    require(m.good(), "short write: " + path + ".json");
}

RasterPatch read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    std::string magic;
    f >> magic;
    require(magic == "P6", "not a P6 ppm: " + path);
    auto next_int = [&f, &path]() {
        // skip whitespace and '#' comment lines between header fields
        int ch = f.peek();
        while (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t' || ch == '#') {
            if (ch == '#') {
                std::string line;
                std::getline(f, line);
            } else {
                f.get();
            }
            ch = f.peek();
        }
        long long v = -1;
        f >> v;
        require(f.good() && v >= 0, "bad ppm header: " + path);
        return v;
    };
    const long long w = next_int(), h = next_int(), maxval = next_int();
    require(maxval == 255, "unsupported ppm maxval: " + path);
    require(w > 0 && h > 0 && w < 100000 && h < 100000, "bad ppm dims: " + path);
    f.get();  // single whitespace byte before the raster

    std::ifstream m(path + ".json");
    require(m.good(), "missing sidecar: " + path + ".json");
    json meta = json::parse(m, nullptr, false);
    require(!meta.is_discarded(), "bad sidecar json: " + path + ".json");
    const auto& bb = meta.at("bbox");
    require(bb.is_array() && bb.size() == 4, "sidecar bbox must have 4 numbers");

    RasterPatch out(int(h), int(w),
                    BBox(GeoPoint(bb[0].get<double>(), bb[1].get<double>()),
                         GeoPoint(bb[2].get<double>(), bb[3].get<double>())));
    f.read(reinterpret_cast<char*>(out.pixels.data()), std::streamsize(out.pixels.size()));
    require(f.gcount() == std::streamsize(out.pixels.size()), "truncated ppm raster: " + path);
    out.source_tiles = meta.value("source_tiles", std::vector<std::string>{});
    out.clamped = meta.value("clamped", false);
    return out;
}

Mat patch_to_mat(const RasterPatch& patch) {
    patch.validate();
    Mat img(patch.c, patch.h * patch.w);
    for (int y = 0; y < patch.h; ++y)
        for (int x = 0; x < patch.w; ++x)
            for (int ch = 0; ch < patch.c; ++ch)
                img.at(ch, y * patch.w + x) = patch.at(y, x, ch) / 255.0 - 0.5;
    return img;
}

TokenGridOut token_projection(Tape& t, Binder& b, const ConvStem& stem,
                              const RasterPatch& patch) {
    Var img = t.leaf(patch_to_mat(patch));
    TokenGridOut out;
    Var feat = nn::conv_stem_forward(t, b, stem, img, patch.h, patch.w, &out.gh, &out.gw);
    out.tokens = t.transpose(feat);
    out.posenc = nn::posenc_grid(out.gh, out.gw, stem.d_out);
    return out;
}

QueryMapOut query_projection(Tape& t, Binder& b, const ConvStem& stem,
                             const RasterPatch& patch) {
    Var img = t.leaf(patch_to_mat(patch));
    QueryMapOut out;
    Var feat = nn::conv_stem_forward(t, b, stem, img, patch.h, patch.w, &out.gh, &out.gw);
    out.features = t.transpose(feat);
    return out;
}

std::pair<double, double> geo_to_feature(GeoPoint p, const BBox& patch_bbox,
                                         int patch_h, int patch_w, int gh, int gw) {
    require(gh > 0 && gw > 0 && patch_h % gh == 0 && patch_w % gw == 0,
            "feature grid must evenly divide the patch");
    const GeoPoint px = geo::geo_to_pixel(p, patch_bbox, patch_w, patch_h);
    const double sx = double(patch_w) / gw, sy = double(patch_h) / gh;
    return {px.x / sx - 0.5, px.y / sy - 0.5};
}

}  // namespace aoitr::img
