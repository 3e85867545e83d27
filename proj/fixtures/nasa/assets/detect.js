function hasFlash() {
  return navigator.plugins && navigator.plugins["Shockwave Flash"];
}
if (!hasFlash()) {
  window.location = "noflash.html";
}
