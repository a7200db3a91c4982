// Single point of configuration for cpp-httplib so every translation unit
// sees the same ClientImpl layout; include this instead of httplib.h.
#pragma once

#ifdef FHIRSCULPTOR_HAVE_OPENSSL
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#endif

#include "httplib.h"
