#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aoitr/geometry.hpp"
#include "aoitr/nn.hpp"

namespace aoitr::img {

using geo::BBox;
using geo::GeoPoint;
using nn::Binder;
using nn::ConvStem;
using nn::Mat;
using nn::Tape;
using nn::Var;

// Row-major RGB raster; row 0 is the north edge of bbox.
struct RasterPatch {
    int h = 0, w = 0, c = 3;
    std::vector<std::uint8_t> pixels;
    BBox bbox;
    std::vector<std::string> source_tiles;
    bool clamped = false;  // crop window was pushed back inside the mosaic

    RasterPatch() = default;
    RasterPatch(int h_, int w_, const BBox& bbox_, std::uint8_t fill = 0);

    std::uint8_t& at(int y, int x, int ch) { return pixels[size_t(y * w + x) * c + ch]; }
    std::uint8_t at(int y, int x, int ch) const { return pixels[size_t(y * w + x) * c + ch]; }
    void validate() const;
};

// Mosaic of equal square tiles; tile (0,0) is the north-west corner.
struct TileGrid {
    int rows = 0, cols = 0, tile_px = 0;
    BBox bbox;
    std::vector<std::optional<RasterPatch>> tiles;  // row-major

    static TileGrid empty(int rows, int cols, int tile_px, const BBox& bbox);
    std::optional<RasterPatch>& at(int r, int c) { return tiles[size_t(r * cols + c)]; }
    const std::optional<RasterPatch>& at(int r, int c) const { return tiles[size_t(r * cols + c)]; }
    BBox cell_bbox(int r, int c) const;
};

// Crop a window_deg x window_deg degree window centered on `center` out of the
// mosaic, copying bytes verbatim (no resampling). Windows that overhang the
// mosaic edge are pushed back inside and flagged. Throws if a needed tile is
// missing, naming it.
RasterPatch stitch_and_crop(const TileGrid& grid, GeoPoint center, double window_deg);

// PPM (P6) with a JSON sidecar at <path>.json carrying bbox + provenance.
void write_ppm(const std::string& path, const RasterPatch& patch);
RasterPatch read_ppm(const std::string& path);

// C x (H*W) float image, pixel/255 - 0.5.
Mat patch_to_mat(const RasterPatch& patch);

struct TokenGridOut {
    Var tokens;   // T x d, row index y*gw + x
    int gh = 0, gw = 0;
    Mat posenc;   // T x d, fixed sinusoidal, same row order
};
struct QueryMapOut {
    Var features;  // (gh*gw) x d, bilinear-sampleable
    int gh = 0, gw = 0;
};

TokenGridOut token_projection(Tape& t, Binder& b, const ConvStem& stem,
                              const RasterPatch& patch);
QueryMapOut query_projection(Tape& t, Binder& b, const ConvStem& stem,
                             const RasterPatch& patch);

// Continuous feature-grid coordinates of a geo point, aligned so that the
// center of feature cell (i, j) maps to exactly (j, i). Feed to Tape::bilinear.
std::pair<double, double> geo_to_feature(GeoPoint p, const BBox& patch_bbox,
                                         int patch_h, int patch_w, int gh, int gw);

}  // namespace aoitr::img
