#include "gazezone/preprocess/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace gazezone::preprocess {

Image load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error("cannot decode image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image img(rgb.cols, rgb.rows);
    for (int y = 0; y < rgb.rows; ++y) {
        std::memcpy(img.at(0, y), rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
    }
    return img;
}

void save_image(const Image& image, const std::filesystem::path& path) {
    if (image.empty()) throw Error("refusing to write an empty image to " + path.string());
    cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write image " + path.string());
}

Frame load_frame(const std::string& frame_ref) { return Frame{frame_ref, load_image(frame_ref)}; }

Image crop(const Image& image, const BBox& rect) {
    if (!rect.inside(image.width, image.height)) throw Error("crop rectangle lies outside the image");
    Image out(rect.w, rect.h);
    for (int y = 0; y < rect.h; ++y) {
        std::memcpy(out.at(0, y), image.at(rect.x, rect.y + y), static_cast<std::size_t>(rect.w) * 3);
    }
    return out;
}

std::vector<float> resize_bilinear(std::span<const float> src, int src_w, int src_h, int channels, int dst_w,
                                   int dst_h) {
    if (src_w <= 0 || src_h <= 0 || dst_w <= 0 || dst_h <= 0 || channels <= 0) {
        throw Error("resize_bilinear: dimensions must be positive");
    }
    if (src.size() != static_cast<std::size_t>(src_w) * src_h * channels) {
        throw Error("resize_bilinear: source buffer size mismatch");
    }

    struct Tap {
        int i0, i1;
        float f;
    };
    auto taps = [](int src_n, int dst_n) {
        std::vector<Tap> t(dst_n);
        const double scale = static_cast<double>(src_n) / dst_n;
        for (int d = 0; d < dst_n; ++d) {
            double s = (d + 0.5) * scale - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
            const int i0 = static_cast<int>(std::floor(s));
            const int i1 = std::min(i0 + 1, src_n - 1);
            t[d] = {i0, i1, static_cast<float>(s - i0)};
        }
        return t;
    };
    const auto tx = taps(src_w, dst_w);
    const auto ty = taps(src_h, dst_h);

    std::vector<float> dst(static_cast<std::size_t>(dst_w) * dst_h * channels);
    for (int y = 0; y < dst_h; ++y) {
        const float* row0 = src.data() + static_cast<std::size_t>(ty[y].i0) * src_w * channels;
        const float* row1 = src.data() + static_cast<std::size_t>(ty[y].i1) * src_w * channels;
        const float fy = ty[y].f;
        float* out = dst.data() + static_cast<std::size_t>(y) * dst_w * channels;
        for (int x = 0; x < dst_w; ++x) {
            const float fx = tx[x].f;
            const int a = tx[x].i0 * channels;
            const int b = tx[x].i1 * channels;
            for (int c = 0; c < channels; ++c) {
                const float top = row0[a + c] + (row0[b + c] - row0[a + c]) * fx;
                const float bot = row1[a + c] + (row1[b + c] - row1[a + c]) * fx;
                out[x * channels + c] = top + (bot - top) * fy;
            }
        }
    }
    return dst;
}

}  // namespace gazezone::preprocess
