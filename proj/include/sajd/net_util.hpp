#pragma once

#include <string>

namespace sajd {

// Blocking TCP client connect; returns the fd. Throws IoError.
int connectTcp(const std::string& host, int port);

// Writes the whole buffer; throws IoError on failure.
void sendAll(int fd, const std::string& data);

void closeFd(int fd);

}  // namespace sajd
