#include "mtod/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "mtod/error.hpp"

namespace mtod {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "MTODCKPT";
constexpr std::size_t kPrefix = 8 + 4 + 8;  // magic, version, header length

template <typename U>
void put(std::vector<unsigned char>& out, U value) {
    unsigned char buf[sizeof(U)];
    std::memcpy(buf, &value, sizeof(U));
    out.insert(out.end(), buf, buf + sizeof(U));
}

template <typename U>
U get(const std::vector<unsigned char>& in, std::size_t at) {
    U value;
    std::memcpy(&value, in.data() + at, sizeof(U));
    return value;
}

std::string shape_text(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const std::filesystem::path& path, const Transformer<float>& model,
                     const Vocab& vocab, const json& meta) {
    if (static_cast<int>(vocab.size()) != model.config().vocab_size) {
        throw UsageError("vocabulary size " + std::to_string(vocab.size()) +
                         " does not match model vocab_size " +
                         std::to_string(model.config().vocab_size));
    }
    json tensors = json::array();
    for (const auto& t : model.layout().tensors()) {
        tensors.push_back(json{{"name", t.name}, {"shape", t.shape}, {"offset", t.offset}});
    }
    const json header{{"config", to_json(model.config())},
                      {"vocab", vocab.to_json()},
                      {"tensors", tensors},
                      {"meta", meta}};
    const std::string text = header.dump();

    std::vector<unsigned char> bytes(kMagic.begin(), kMagic.end());
    put<std::uint32_t>(bytes, kCheckpointVersion);
    put<std::uint64_t>(bytes, text.size());
    bytes.insert(bytes.end(), text.begin(), text.end());
    const auto& p = model.params();
    const auto* raw = reinterpret_cast<const unsigned char*>(p.data());
    bytes.insert(bytes.end(), raw, raw + p.size() * sizeof(float));
    put<std::uint64_t>(bytes, fnv1a64(bytes.data(), bytes.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeFailure("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing checkpoint " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    const std::string where = "checkpoint " + path.string();

    if (bytes.size() < kMagic.size() ||
        std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw DataError(where + ": not a checkpoint file");
    }
    if (bytes.size() < kPrefix + 8) throw DataError(where + ": checksum failure (file truncated)");
    const auto version = get<std::uint32_t>(bytes, 8);
    if (version != kCheckpointVersion) {
        throw DataError(where + ": version mismatch (file " + std::to_string(version) +
                        ", expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::size_t body = bytes.size() - 8;
    if (fnv1a64(bytes.data(), body) != get<std::uint64_t>(bytes, body)) {
        throw DataError(where + ": checksum failure");
    }

    const auto header_len = get<std::uint64_t>(bytes, 12);
    if (header_len > body - kPrefix) throw DataError(where + ": header length out of range");
    json header;
    try {
        header = json::parse(bytes.begin() + kPrefix,
                             bytes.begin() + static_cast<std::ptrdiff_t>(kPrefix + header_len));
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed header: " + e.what());
    }

    try {
        const ModelConfig config = model_config_from_json(header.at("config"));
        Vocab vocab = Vocab::from_json(header.at("vocab"));
        Transformer<float> model(config);

        const auto& expected = model.layout().tensors();
        const json& manifest = header.at("tensors");
        if (!manifest.is_array() || manifest.size() != expected.size()) {
            throw DataError(where + ": tensor manifest does not match the config");
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            const auto& e = expected[i];
            const auto name = manifest[i].at("name").get<std::string>();
            const auto shape = manifest[i].at("shape").get<std::vector<int>>();
            const auto offset = manifest[i].at("offset").get<std::size_t>();
            if (name != e.name || shape != e.shape || offset != e.offset) {
                throw DataError(where + ": shape error in tensor " + name + " " + shape_text(shape) +
                                ", expected " + e.name + " " + shape_text(e.shape));
            }
        }
        if (static_cast<int>(vocab.size()) != config.vocab_size) {
            throw DataError(where + ": shape error in tensor wte: " + std::to_string(config.vocab_size) +
                            " rows but the vocabulary has " + std::to_string(vocab.size()) + " tokens");
        }

        const std::size_t payload = model.params().size() * sizeof(float);
        if (kPrefix + header_len + payload != body) {
            throw DataError(where + ": payload size does not match the tensor manifest");
        }
        std::memcpy(model.params().data(), bytes.data() + kPrefix + header_len, payload);
        return Checkpoint{std::move(model), std::move(vocab), header.value("meta", json::object())};
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed header: " + e.what());
    }
}

}  // namespace mtod
