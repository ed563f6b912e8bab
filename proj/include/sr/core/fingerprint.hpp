#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace sr::core {

// FNV-1a 64-bit; content fingerprints for manifests and frozen-backend checks.
class Fingerprint {
public:
    Fingerprint& bytes(const void* p, size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fingerprint& str(std::string_view s) { return bytes(s.data(), s.size()); }
    template <typename T>
    Fingerprint& pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        return bytes(&v, sizeof(v));
    }
    uint64_t value() const { return h_; }

private:
    uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace sr::core
