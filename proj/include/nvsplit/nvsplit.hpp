#ifndef NVSPLIT_NVSPLIT_HPP
#define NVSPLIT_NVSPLIT_HPP

#include <nvsplit/config.hpp>
#include <nvsplit/core.hpp>
#include <nvsplit/errorlab.hpp>
#include <nvsplit/expm.hpp>
#include <nvsplit/flows.hpp>
#include <nvsplit/io.hpp>
#include <nvsplit/model.hpp>
#include <nvsplit/parallel.hpp>
#include <nvsplit/paths.hpp>
#include <nvsplit/registry.hpp>
#include <nvsplit/rng.hpp>
#include <nvsplit/schemes.hpp>
#include <nvsplit/stats.hpp>
#include <nvsplit/vecfield.hpp>

#endif  // NVSPLIT_NVSPLIT_HPP
