#include <zlib.h>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fedsim/dataset.hpp"

namespace fedsim {

namespace {

// IDX header: two zero bytes, a type code, a dimension count, then one
// big-endian uint32 per dimension. zlib's gz layer reads plain files as-is,
// which makes the loader gzip-transparent.
struct IdxFile {
    int type = 0;
    std::vector<uint32_t> dims;
    std::vector<uint8_t> data;
};

class GzReader {
public:
    explicit GzReader(const std::string& path) : path_(path), f_(gzopen(path.c_str(), "rb")) {
        if (f_ == nullptr) throw std::runtime_error("idx: cannot open " + path);
    }
    ~GzReader() {
        if (f_ != nullptr) gzclose(f_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read_exact(void* dst, size_t n) {
        const int got = gzread(f_, dst, static_cast<unsigned>(n));
        if (got < 0 || static_cast<size_t>(got) != n) {
            throw std::runtime_error("idx: truncated or corrupt file " + path_);
        }
    }
    uint32_t read_u32_be() {
        uint8_t b[4];
        read_exact(b, 4);
        return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) |
               uint32_t(b[3]);
    }

private:
    std::string path_;
    gzFile f_;
};

IdxFile read_idx(const std::string& path) {
    GzReader in(path);
    const uint32_t magic = in.read_u32_be();
    if ((magic >> 16) != 0) {
        throw std::runtime_error("idx: bad magic in " + path);
    }
    IdxFile file;
    file.type = static_cast<int>((magic >> 8) & 0xff);
    const int ndims = static_cast<int>(magic & 0xff);
    if (file.type != 0x08) {
        throw std::runtime_error("idx: only unsigned-byte payloads are supported (" + path + ")");
    }
    if (ndims < 1 || ndims > 3) {
        throw std::runtime_error("idx: unsupported dimension count in " + path);
    }
    size_t total = 1;
    for (int i = 0; i < ndims; ++i) {
        const uint32_t d = in.read_u32_be();
        file.dims.push_back(d);
        total *= d;
    }
    file.data.resize(total);
    if (total > 0) in.read_exact(file.data.data(), total);
    return file;
}

}  // namespace

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    IdxFile images = read_idx(images_path);
    IdxFile labels = read_idx(labels_path);
    if (images.dims.empty() || labels.dims.size() != 1) {
        throw std::runtime_error("idx: expected an image tensor and a label vector");
    }
    if (images.dims[0] != labels.dims[0]) {
        throw std::runtime_error("idx: image/label counts differ");
    }
    const size_t n = images.dims[0];
    size_t per_sample = 1;
    for (size_t i = 1; i < images.dims.size(); ++i) per_sample *= images.dims[i];
    if (n == 0 || per_sample == 0) {
        throw std::runtime_error("idx: empty dataset");
    }

    Dataset out;
    out.num_samples = static_cast<int>(n);
    out.num_features = static_cast<int>(per_sample);
    out.features.resize(n * per_sample);
    for (size_t i = 0; i < n * per_sample; ++i) {
        out.features[i] = static_cast<double>(images.data[i]) / 255.0;
    }
    out.labels.resize(n);
    int max_label = 0;
    for (size_t i = 0; i < n; ++i) {
        out.labels[i] = labels.data[i];
        max_label = std::max(max_label, out.labels[i]);
    }
    out.num_classes = max_label + 1;
    return out;
}

}  // namespace fedsim
