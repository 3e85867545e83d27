function loadGallery() {
  var thumbs = document.getElementsByClassName('thumb');
  thumbs[0].src = "gallery/" + "thumb1.jpg";
  thumbs[1].src = 'gallery/thumb2.jpg';
  thumbs[2].src = "gallery/thumb3.jpg";
  fetch("api/featured.json").then(function (r) { return r.json(); });
  document.getElementById('spinner').style.display = 'none';
}
